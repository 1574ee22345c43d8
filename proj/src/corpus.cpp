#include "csum/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "csum/rng.hpp"

namespace csum {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(pos, end - pos));
    if (end == text.size()) break;
    pos = end + 1;
  }
  return lines;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void truncate_tokens(std::vector<std::string>& tokens, int cap) {
  if (static_cast<int>(tokens.size()) > cap) tokens.resize(static_cast<std::size_t>(cap));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '\\') out += "\\\\";
    else if (c == '\t') out += "\\t";
    else if (c == '\n') out += "\\n";
    else out.push_back(c);
  }
  return out;
}

std::string unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[++i];
      if (n == 't') out.push_back('\t');
      else if (n == 'n') out.push_back('\n');
      else out.push_back(n);
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::vector<std::string> split_fields(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    std::size_t end = line.find(sep, pos);
    if (end == std::string_view::npos) {
      out.emplace_back(line.substr(pos));
      return out;
    }
    out.emplace_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
}

std::vector<std::string> split_tokens(std::string_view field) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < field.size()) {
    std::size_t end = field.find(' ', pos);
    if (end == std::string_view::npos) end = field.size();
    if (end > pos) out.emplace_back(field.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocab
// ---------------------------------------------------------------------------

const char* Vocab::pad_word() { return "<pad>"; }
const char* Vocab::unk_word() { return "<UNK>"; }
const char* Vocab::start_word() { return "<s>"; }
const char* Vocab::end_word() { return "</s>"; }

Vocab::Vocab() {
  push(pad_word());
  push(unk_word());
  push(start_word());
  push(end_word());
}

void Vocab::push(const std::string& word) {
  index_.emplace(word, static_cast<int>(words_.size()));
  words_.push_back(word);
}

Vocab Vocab::build(const std::vector<const std::vector<std::string>*>& sequences, int max_size) {
  if (max_size < 4) throw std::invalid_argument("vocab max_size must cover the reserved entries");
  Vocab v;
  std::map<std::string, long> freq;
  for (const auto* seq : sequences) {
    for (const std::string& w : *seq) {
      if (v.index_.count(w)) continue;  // reserved spellings keep their slots
      ++freq[w];
    }
  }
  std::vector<std::pair<std::string, long>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::size_t cap = static_cast<std::size_t>(max_size - 4);
  for (std::size_t i = 0; i < ranked.size() && i < cap; ++i) v.push(ranked[i].first);
  return v;
}

int Vocab::index_of(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::word_of(int index) const {
  if (index < 0 || index >= size()) throw std::out_of_range("vocab index out of range");
  return words_[static_cast<std::size_t>(index)];
}

void Vocab::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocab file: " + path);
  for (int i = 0; i < size(); ++i) out << words_[static_cast<std::size_t>(i)] << '\t' << i << '\n';
}

Vocab Vocab::read(const std::string& path) {
  std::string text = read_file(path);
  Vocab v;
  v.words_.clear();
  v.index_.clear();
  for (std::string_view line : split_lines(text)) {
    if (line.empty()) continue;
    std::vector<std::string> cols = split_fields(line, '\t');
    if (cols.size() != 2) throw std::runtime_error("malformed vocab line in " + path);
    const int idx = std::stoi(cols[1]);
    if (idx != v.size()) throw std::runtime_error("non-contiguous vocab indices in " + path);
    v.push(cols[0]);
  }
  if (v.size() < 4) throw std::runtime_error("vocab missing reserved entries: " + path);
  return v;
}

// ---------------------------------------------------------------------------
// Filtering & tokenization
// ---------------------------------------------------------------------------

std::optional<std::string> extract_summary(std::string_view javadoc_raw) {
  std::string body = trim(javadoc_raw);
  if (body.size() < 4 || body.compare(0, 3, "/**") != 0) return std::nullopt;
  body = body.substr(3);
  if (body.size() >= 2 && body.compare(body.size() - 2, 2, "*/") == 0)
    body = body.substr(0, body.size() - 2);

  // strip leading asterisks per line and drop @tag lines
  std::string text;
  for (std::string_view raw_line : split_lines(body)) {
    std::string line = trim(raw_line);
    std::size_t a = 0;
    while (a < line.size() && line[a] == '*') ++a;
    line = trim(std::string_view(line).substr(a));
    if (!line.empty() && line[0] == '@') continue;
    if (!text.empty()) text.push_back('\n');
    text += line;
  }
  text = trim(text);

  std::size_t period = text.find('.');
  std::string sentence =
      period != std::string::npos ? text.substr(0, period) : text;
  if (period == std::string::npos) {
    std::size_t nl = text.find('\n');
    if (nl != std::string::npos) sentence = text.substr(0, nl);
  }
  sentence = trim(sentence);
  if (sentence.empty()) return std::nullopt;
  return sentence;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  char prev = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isalpha(static_cast<unsigned char>(c))) {
      if (std::isupper(static_cast<unsigned char>(c)) && !cur.empty()) {
        const bool prev_lower = std::islower(static_cast<unsigned char>(prev));
        const bool prev_upper = std::isupper(static_cast<unsigned char>(prev));
        const bool next_lower =
            i + 1 < text.size() && std::islower(static_cast<unsigned char>(text[i + 1]));
        if (prev_lower || (prev_upper && next_lower)) {
          out.push_back(cur);
          cur.clear();
        }
      }
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
    prev = c;
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool is_english(std::string_view text, const std::set<std::string>& stopwords, int min_hits,
                double min_ascii_ratio) {
  long non_space = 0, ascii_letters = 0;
  for (char c : text) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (u < 128 && std::isspace(u)) continue;
    ++non_space;
    if (u < 128 && std::isalpha(u)) ++ascii_letters;
  }
  if (non_space == 0) return false;
  const double ratio = static_cast<double>(ascii_letters) / static_cast<double>(non_space);
  if (ratio < min_ascii_ratio) return false;

  int hits = 0;
  for (const std::string& w : tokenize(text)) {
    if (stopwords.count(w) && ++hits >= min_hits) return true;
  }
  return min_hits <= 0;
}

bool is_autogenerated(std::string_view file_text, const std::vector<std::string>& phrases) {
  for (std::string_view raw_line : split_lines(file_text)) {
    const std::string line = lowercase(raw_line);
    for (const std::string& phrase : phrases) {
      if (!phrase.empty() && line.find(phrase) != std::string::npos) return true;
    }
  }
  return false;
}

std::vector<ProcessedExample> reinstate_unique_autogen(
    const std::vector<ProcessedExample>& removed) {
  std::set<std::string> seen;
  std::vector<ProcessedExample> out;
  for (const ProcessedExample& ex : removed) {
    std::string key = join_tokens(ex.code_tokens);
    key.push_back('\x1f');
    key += join_tokens(ex.comment_tokens);
    if (!seen.insert(std::move(key)).second) continue;
    out.push_back(ex);
    out.back().train_only = true;
  }
  return out;
}

ProcessOutcome process_record(const MethodRecord& rec, const ApiWhitelist& wl,
                              const std::set<std::string>& stopwords, const CorpusConfig& cfg) {
  ProcessOutcome out;
  std::optional<std::string> summary = extract_summary(rec.javadoc_raw);
  if (!summary) {
    out.reject = Reject::kNoSummary;
    return out;
  }
  if (!std::isalpha(static_cast<unsigned char>((*summary)[0]))) {
    out.reject = Reject::kBadFirstToken;
    return out;
  }
  std::vector<std::string> comment_words = tokenize(*summary);
  if (static_cast<int>(comment_words.size()) < cfg.min_comment_tokens) {
    out.reject = Reject::kTooShort;
    return out;
  }
  if (!is_english(*summary, stopwords, cfg.min_stopword_hits, cfg.min_ascii_ratio)) {
    out.reject = Reject::kNotEnglish;
    return out;
  }
  AstNode tree;
  try {
    tree = parse_method(rec.method_source);
  } catch (const ParseError&) {
    out.reject = Reject::kParseError;
    return out;
  }

  ProcessedExample ex;
  ex.id = rec.id;
  ex.project_id = rec.project_id;
  ex.sbt_tokens = sbt_flatten(tree);
  ex.sbtao_tokens = sbt_ao_flatten(tree, wl);
  truncate_tokens(ex.sbt_tokens, cfg.astlen);
  truncate_tokens(ex.sbtao_tokens, cfg.astlen);

  ex.code_tokens.push_back(Vocab::start_word());
  for (std::string& w : tokenize(rec.method_source)) ex.code_tokens.push_back(std::move(w));
  ex.code_tokens.push_back(Vocab::end_word());
  truncate_tokens(ex.code_tokens, cfg.txtlen);

  ex.comment_tokens.push_back(Vocab::start_word());
  for (std::string& w : comment_words) ex.comment_tokens.push_back(std::move(w));
  ex.comment_tokens.push_back(Vocab::end_word());
  truncate_tokens(ex.comment_tokens, cfg.comlen);

  out.example = std::move(ex);
  return out;
}

// ---------------------------------------------------------------------------
// Framing & splitting
// ---------------------------------------------------------------------------

std::vector<std::int32_t> frame_sequence(const std::vector<std::string>& tokens, int target_len,
                                         const Vocab& vocab) {
  std::vector<std::int32_t> out(static_cast<std::size_t>(target_len), Vocab::kPad);
  const int n = std::min<int>(target_len, static_cast<int>(tokens.size()));
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = vocab.index_of(tokens[static_cast<std::size_t>(i)]);
  return out;
}

SplitCorpus split_by_project(const std::vector<ProcessedExample>& records,
                             const std::vector<ProcessedExample>& reinstated,
                             const CorpusConfig& cfg, std::uint64_t seed, PrepStats* stats) {
  std::set<std::string> project_set;
  for (const ProcessedExample& ex : records) project_set.insert(ex.project_id);
  const int projects = static_cast<int>(project_set.size());
  if (projects < 3)
    throw std::invalid_argument("split_by_project needs at least 3 projects, got " +
                                std::to_string(projects));

  std::vector<std::string> order(project_set.begin(), project_set.end());
  Rng rng(seed);
  rng.shuffle(order);

  int n_train = static_cast<int>(projects * cfg.train_ratio);
  const int n_valid = std::max(1, static_cast<int>(projects * cfg.valid_ratio));
  int n_test = projects - n_train - n_valid;
  if (n_test < 1) {
    n_test = 1;
    n_train = projects - n_valid - n_test;
  }
  if (n_train < 1) throw std::invalid_argument("split ratios leave no training projects");

  std::map<std::string, int> bucket;  // 0 train, 1 valid, 2 test
  for (int i = 0; i < projects; ++i)
    bucket[order[static_cast<std::size_t>(i)]] = i < n_train ? 0 : (i < n_train + n_valid ? 1 : 2);

  SplitCorpus split;
  split.seed = seed;
  for (const ProcessedExample& ex : records) {
    switch (bucket.at(ex.project_id)) {
      case 0: split.train.push_back(ex); break;
      case 1: split.validation.push_back(ex); break;
      default: split.test.push_back(ex); break;
    }
  }
  for (const ProcessedExample& ex : reinstated) {
    auto it = bucket.find(ex.project_id);
    if (it != bucket.end() && it->second == 0) {
      split.train.push_back(ex);
      if (stats) ++stats->reinstated;
    } else {
      if (stats) ++stats->reinstated_dropped;
    }
  }
  return split;
}

// ---------------------------------------------------------------------------
// Word lists & record loading
// ---------------------------------------------------------------------------

std::set<std::string> parse_word_list(std::string_view text) {
  std::set<std::string> out;
  for (std::string_view line : split_lines(text)) {
    std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    std::string word = trim(line);
    if (!word.empty()) out.insert(std::move(word));
  }
  return out;
}

std::vector<std::string> parse_phrase_list(std::string_view text) {
  std::vector<std::string> out;
  for (std::string_view line : split_lines(text)) {
    std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    std::string phrase = lowercase(trim(line));
    if (!phrase.empty()) out.push_back(std::move(phrase));
  }
  return out;
}

std::set<std::string> read_word_list(const std::string& path) {
  return parse_word_list(read_file(path));
}

std::vector<std::string> read_phrase_list(const std::string& path) {
  return parse_phrase_list(read_file(path));
}

namespace {

/// Splits a one-method file into (javadoc, method): leading // and /* */
/// comments are skipped, a leading /** */ block becomes the JavaDoc.
void split_source_file(const std::string& text, std::string& javadoc, std::string& method) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  javadoc.clear();
  while (i < n) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    } else if (text.compare(i, 2, "//") == 0) {
      std::size_t nl = text.find('\n', i);
      i = nl == std::string::npos ? n : nl + 1;
    } else if (text.compare(i, 3, "/**") == 0) {
      std::size_t end = text.find("*/", i + 3);
      if (end == std::string::npos) break;
      javadoc = text.substr(i, end + 2 - i);
      i = end + 2;
    } else if (text.compare(i, 2, "/*") == 0) {
      std::size_t end = text.find("*/", i + 2);
      if (end == std::string::npos) break;
      i = end + 2;
    } else {
      break;
    }
  }
  method = i < n ? text.substr(i) : std::string();
}

}  // namespace

std::vector<MethodRecord> load_records_from_dir(const std::string& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw std::runtime_error("not a directory: " + root);
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".java")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<MethodRecord> out;
  long next_id = 1;
  for (const fs::path& p : files) {
    MethodRecord rec;
    rec.id = next_id++;
    fs::path rel = fs::relative(p, root);
    rec.project_id = rel.begin() == rel.end() ? std::string("unknown") : rel.begin()->string();
    rec.file_text = read_file(p.string());
    split_source_file(rec.file_text, rec.javadoc_raw, rec.method_source);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<MethodRecord> load_records_from_tsv(const std::string& path) {
  std::string text = read_file(path);
  std::vector<MethodRecord> out;
  for (std::string_view line : split_lines(text)) {
    if (line.empty()) continue;
    std::vector<std::string> cols = split_fields(line, '\t');
    if (cols.size() != 4)
      throw std::runtime_error("input TSV needs 4 columns (id, project_id, method, javadoc)");
    MethodRecord rec;
    rec.id = std::stol(cols[0]);
    rec.project_id = cols[1];
    rec.method_source = unescape_field(cols[2]);
    rec.javadoc_raw = unescape_field(cols[3]);
    rec.file_text = rec.javadoc_raw + "\n" + rec.method_source;
    out.push_back(std::move(rec));
  }
  return out;
}

void write_examples_tsv(const std::string& path, const std::vector<ProcessedExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  for (const ProcessedExample& ex : examples) {
    out << ex.id << '\t' << escape_field(ex.project_id) << '\t' << join_tokens(ex.code_tokens)
        << '\t' << join_tokens(ex.sbt_tokens) << '\t' << join_tokens(ex.sbtao_tokens) << '\t'
        << join_tokens(ex.comment_tokens) << '\n';
  }
}

std::vector<ProcessedExample> read_examples_tsv(const std::string& path) {
  std::string text = read_file(path);
  std::vector<ProcessedExample> out;
  for (std::string_view line : split_lines(text)) {
    if (line.empty()) continue;
    std::vector<std::string> cols = split_fields(line, '\t');
    if (cols.size() != 6) throw std::runtime_error("malformed dataset line in " + path);
    ProcessedExample ex;
    ex.id = std::stol(cols[0]);
    ex.project_id = unescape_field(cols[1]);
    ex.code_tokens = split_tokens(cols[2]);
    ex.sbt_tokens = split_tokens(cols[3]);
    ex.sbtao_tokens = split_tokens(cols[4]);
    ex.comment_tokens = split_tokens(cols[5]);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace csum
