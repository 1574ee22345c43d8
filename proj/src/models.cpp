#include "csum/models.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

namespace csum {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kAttendGru: return "attendgru";
    case ModelKind::kAstAttendGru: return "ast-attendgru";
    case ModelKind::kSbt: return "sbt";
  }
  throw std::invalid_argument("to_string: bad ModelKind value");
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "attendgru") return ModelKind::kAttendGru;
  if (name == "ast-attendgru") return ModelKind::kAstAttendGru;
  if (name == "sbt") return ModelKind::kSbt;
  throw std::invalid_argument("unknown model kind '" + name +
                              "' (expected attendgru, ast-attendgru, or sbt)");
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v < 1) throw std::invalid_argument(std::string("ModelConfig: ") + what +
                                           " must be positive, got " + std::to_string(v));
  };
  positive(txtlen, "txtlen");
  positive(astlen, "astlen");
  positive(comlen, "comlen");
  positive(embdims, "embdims");
  positive(rnndims, "rnndims");
  positive(txtvocabsize, "txtvocabsize");
  positive(astvocabsize, "astvocabsize");
  positive(comvocabsize, "comvocabsize");
  if (comlen < 2)
    throw std::invalid_argument("ModelConfig: comlen must be >= 2 (start token + one word)");
}

// ---------------------------------------------------------------------------
// checkpoint I/O
// ---------------------------------------------------------------------------

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw CheckpointError("checkpoint truncated while reading a u32");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::string config_to_text(const ModelConfig& cfg) {
  std::ostringstream out;
  out << "kind=" << to_string(cfg.kind) << "\n"
      << "txtlen=" << cfg.txtlen << "\n"
      << "astlen=" << cfg.astlen << "\n"
      << "comlen=" << cfg.comlen << "\n"
      << "embdims=" << cfg.embdims << "\n"
      << "rnndims=" << cfg.rnndims << "\n"
      << "txtvocabsize=" << cfg.txtvocabsize << "\n"
      << "astvocabsize=" << cfg.astvocabsize << "\n"
      << "comvocabsize=" << cfg.comvocabsize << "\n";
  return out.str();
}

int parse_int_field(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw CheckpointError("checkpoint config: bad integer for " + key + ": '" + value + "'");
  }
}

ModelConfig config_from_text(const std::string& text) {
  ModelConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw CheckpointError("checkpoint config: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (!seen.insert(key).second)
      throw CheckpointError("checkpoint config: duplicate key '" + key + "'");
    if (key == "kind") {
      try {
        cfg.kind = model_kind_from_string(value);
      } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("checkpoint config: ") + e.what());
      }
    } else if (key == "txtlen") {
      cfg.txtlen = parse_int_field(key, value);
    } else if (key == "astlen") {
      cfg.astlen = parse_int_field(key, value);
    } else if (key == "comlen") {
      cfg.comlen = parse_int_field(key, value);
    } else if (key == "embdims") {
      cfg.embdims = parse_int_field(key, value);
    } else if (key == "rnndims") {
      cfg.rnndims = parse_int_field(key, value);
    } else if (key == "txtvocabsize") {
      cfg.txtvocabsize = parse_int_field(key, value);
    } else if (key == "astvocabsize") {
      cfg.astvocabsize = parse_int_field(key, value);
    } else if (key == "comvocabsize") {
      cfg.comvocabsize = parse_int_field(key, value);
    } else {
      throw CheckpointError("checkpoint config: unknown key '" + key + "'");
    }
  }
  static const char* kRequired[] = {"kind",    "txtlen",       "astlen",       "comlen",
                                    "embdims", "rnndims",      "txtvocabsize", "astvocabsize",
                                    "comvocabsize"};
  for (const char* key : kRequired)
    if (!seen.count(key)) throw CheckpointError(std::string("checkpoint config: missing ") + key);
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& m) {
  m.config.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_u32(out, kCheckpointVersion);
  const std::string cfg = config_to_text(m.config);
  write_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  std::vector<unsigned char> buf;
  for (const std::string& name : m.params.names()) {
    const Tensor& t = m.params.value(name);
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (int r = 0; r < t.rank(); ++r) write_u32(out, static_cast<std::uint32_t>(t.dim(r)));
    buf.resize(t.numel() * 4);
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(t.raw()[i]);
      buf[i * 4 + 0] = static_cast<unsigned char>(bits & 0xff);
      buf[i * 4 + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
      buf[i * 4 + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
      buf[i * 4 + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw CheckpointError("write failed for checkpoint: " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);

  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + sizeof(magic), kCheckpointMagic))
    throw CheckpointError("not a checkpoint file: " + path);
  const std::uint32_t version = read_u32(in);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");

  const std::uint32_t cfg_len = read_u32(in);
  std::string cfg_text(cfg_len, '\0');
  in.read(cfg_text.data(), cfg_len);
  if (!in) throw CheckpointError("checkpoint truncated in config block");

  Model m;
  m.config = config_from_text(cfg_text);
  m.config.validate();
  detail::add_params(m.params, m.config);

  std::set<std::string> filled;
  std::vector<unsigned char> buf;
  while (true) {
    unsigned char peek[4];
    in.read(reinterpret_cast<char*>(peek), 4);
    if (in.gcount() == 0 && in.eof()) break;
    if (in.gcount() != 4) throw CheckpointError("checkpoint truncated in tensor record");
    const std::uint32_t name_len = static_cast<std::uint32_t>(peek[0]) |
                                   (static_cast<std::uint32_t>(peek[1]) << 8) |
                                   (static_cast<std::uint32_t>(peek[2]) << 16) |
                                   (static_cast<std::uint32_t>(peek[3]) << 24);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw CheckpointError("checkpoint truncated in tensor name");
    if (!m.params.has(name)) throw CheckpointError("checkpoint has unknown tensor '" + name + "'");
    if (!filled.insert(name).second)
      throw CheckpointError("checkpoint repeats tensor '" + name + "'");

    Tensor& t = m.params.value(name);
    const std::uint32_t rank = read_u32(in);
    if (rank != static_cast<std::uint32_t>(t.rank()))
      throw CheckpointError("checkpoint tensor '" + name + "' has rank " + std::to_string(rank) +
                            ", expected " + std::to_string(t.rank()));
    for (int r = 0; r < t.rank(); ++r) {
      const std::uint32_t d = read_u32(in);
      if (d != static_cast<std::uint32_t>(t.dim(r)))
        throw CheckpointError("checkpoint tensor '" + name + "' dim " + std::to_string(r) +
                              " is " + std::to_string(d) + ", expected " +
                              std::to_string(t.dim(r)));
    }
    buf.resize(t.numel() * 4);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw CheckpointError("checkpoint truncated in tensor '" + name + "'");
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const std::uint32_t bits = static_cast<std::uint32_t>(buf[i * 4 + 0]) |
                                 (static_cast<std::uint32_t>(buf[i * 4 + 1]) << 8) |
                                 (static_cast<std::uint32_t>(buf[i * 4 + 2]) << 16) |
                                 (static_cast<std::uint32_t>(buf[i * 4 + 3]) << 24);
      t.raw()[i] = std::bit_cast<float>(bits);
    }
  }
  for (const std::string& name : m.params.names())
    if (!filled.count(name)) throw CheckpointError("checkpoint missing tensor '" + name + "'");
  return m;
}

}  // namespace csum
