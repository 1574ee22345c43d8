// Subcommand implementations and the argv front end. Conventions shared by
// every command: progress and statistics go to stderr, machine-readable
// artifacts go to files, files are written to a temp name and renamed only
// on success, and each run drops a run.json echoing the resolved config.
#include "csum/cli.hpp"

#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "csum/ast.hpp"
#include "csum/corpus.hpp"
#include "csum/infer.hpp"
#include "csum/metrics.hpp"
#include "csum/models.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace csum {
namespace {

// --- atomic file plumbing ----------------------------------------------------

/// Run a path-taking writer against `<path>.tmp`, then rename into place.
template <class WriteFn>
void atomic_write(const fs::path& path, WriteFn&& write_fn) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_fn(tmp.string());
  fs::rename(tmp, path);
}

void atomic_write_text(const fs::path& path, const std::string& text) {
  atomic_write(path, [&](const std::string& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + p + " for writing");
    out << text;
    if (!out) throw std::runtime_error("short write to " + p);
  });
}

// --- run.json ----------------------------------------------------------------

json config_json(const RunConfig& rc) {
  return json{
      {"subcommand", rc.subcommand},
      {"corpus", rc.corpus},
      {"data_dir", rc.data_dir},
      {"out", rc.out},
      {"checkpoints", rc.checkpoints},
      {"whitelist", rc.whitelist},
      {"stopwords", rc.stopwords},
      {"autogen_phrases", rc.autogen_phrases},
      {"preds", rc.preds},
      {"refs", rc.refs},
      {"refs_out", rc.refs_out},
      {"split", rc.split},
      {"method_id", rc.method_id},
      {"kind", rc.kind},
      {"txtlen", rc.txtlen},
      {"astlen", rc.astlen},
      {"comlen", rc.comlen},
      {"embdims", rc.embdims},
      {"rnndims", rc.rnndims},
      {"txt_vocab", rc.txt_vocab},
      {"ast_vocab", rc.ast_vocab},
      {"com_vocab", rc.com_vocab},
      {"epochs", rc.epochs},
      {"batch_size", rc.batch_size},
      {"seed", rc.seed},
      {"smoothing", rc.smoothing},
      {"sbt_mode", rc.sbt_mode},
  };
}

/// Reproducibility record: the resolved config plus command-specific results.
void write_run_json(const fs::path& dir, const RunConfig& rc, const json& result) {
  json j = config_json(rc);
  if (!result.empty()) j["result"] = result;
  fs::create_directories(dir);
  atomic_write_text(dir / "run.json", j.dump(2) + "\n");
}

fs::path dir_of(const fs::path& file) {
  return file.has_parent_path() ? file.parent_path() : fs::path(".");
}

// --- built-in word lists -----------------------------------------------------

const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> kWords = {
      "a",    "an",  "and", "are",  "as",   "at",    "be",   "but",   "by",   "for",
      "from", "has", "have", "if",  "in",   "into",  "is",   "it",    "its",  "no",
      "not",  "of",  "on",  "or",   "so",   "that",  "the",  "their", "then", "this",
      "to",   "was", "we",  "were", "when", "which", "will", "with",  "you",  "your"};
  return kWords;
}

const std::vector<std::string>& default_autogen_phrases() {
  static const std::vector<std::string> kPhrases = {
      "generated by", "do not edit", "auto-generated", "autogenerated",
      "automatically generated"};
  return kPhrases;
}

// --- shared loading helpers ---------------------------------------------------

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

CorpusConfig corpus_config(const RunConfig& rc) {
  CorpusConfig cc;
  cc.txtlen = rc.txtlen;
  cc.astlen = rc.astlen;
  cc.comlen = rc.comlen;
  cc.txt_vocab = rc.txt_vocab;
  cc.ast_vocab = rc.ast_vocab;
  cc.com_vocab = rc.com_vocab;
  return cc;
}

std::vector<ProcessedExample> load_split(const std::string& data_dir, const std::string& split) {
  require(split == "train" || split == "valid" || split == "test",
          "unknown split '" + split + "' (expected train, valid or test)");
  return read_examples_tsv((fs::path(data_dir) / (split + ".tsv")).string());
}

struct Vocabs {
  Vocab txt, ast, com;
};

Vocabs load_vocabs(const std::string& data_dir) {
  fs::path dir = data_dir;
  return Vocabs{Vocab::read((dir / "txt.vocab").string()),
                Vocab::read((dir / "ast.vocab").string()),
                Vocab::read((dir / "com.vocab").string())};
}

Stream stream_of(const std::string& sbt_mode) {
  if (sbt_mode == "sbt") return Stream::kSbt;
  if (sbt_mode == "sbtao") return Stream::kSbtAo;
  throw std::invalid_argument("unknown --sbt-mode '" + sbt_mode + "' (expected sbt or sbtao)");
}

/// Frame a split the way the given model geometry expects: code into the
/// primary slot (SBT stream for kind=sbt), the selected SBT stream into the
/// AST slot when the model has an AST encoder.
FramedDataset frame_for(const ModelConfig& mc, const std::vector<ProcessedExample>& examples,
                        const Vocabs& v, const std::string& sbt_mode) {
  const Stream ast_stream = stream_of(sbt_mode);
  if (mc.kind == ModelKind::kSbt)
    return frame_dataset(examples, mc, ast_stream, v.ast, v.com);
  return frame_dataset(examples, mc, Stream::kCode, v.txt, v.com,
                       mc.uses_ast() ? &v.ast : nullptr, ast_stream);
}

/// A checkpoint trained against different vocabularies would silently decode
/// garbage; fail loudly instead.
void check_vocab_match(const ModelConfig& mc, const Vocabs& v) {
  auto expect = [](const char* name, int ckpt, int data) {
    if (ckpt != data)
      throw std::runtime_error(std::string("checkpoint was trained with a ") + name +
                               " vocabulary of " + std::to_string(ckpt) +
                               " words but the dataset provides " + std::to_string(data));
  };
  expect("comment", mc.comvocabsize, v.com.size());
  expect("encoder", mc.encoder_vocab(), mc.kind == ModelKind::kSbt ? v.ast.size() : v.txt.size());
  if (mc.uses_ast()) expect("AST", mc.astvocabsize, v.ast.size());
}

KeyedSeqs keyed(const std::vector<long>& ids,
                const std::vector<std::vector<std::string>>& rows) {
  KeyedSeqs out;
  for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = rows[i];
  return out;
}

Smoothing smoothing_of(const std::string& name) {
  if (name == "none") return Smoothing::kNone;
  if (name == "epsilon") return Smoothing::kAddEpsilon;
  throw std::invalid_argument("unknown --smoothing '" + name + "' (expected none or epsilon)");
}

std::string csv_of_slice(const Tensor& t, int rows, int cols) {
  std::string out;
  char buf[40];
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(t.at(0, r, c)));
      out += buf;
      out += (c + 1 < cols) ? ',' : '\n';
    }
  }
  return out;
}

}  // namespace

// --- subcommands ---------------------------------------------------------------

void cmd_prep(const RunConfig& rc) {
  require(!rc.corpus.empty(), "prep: --corpus is required");
  require(!rc.out.empty(), "prep: --out is required");

  std::vector<MethodRecord> records = fs::is_directory(rc.corpus)
                                          ? load_records_from_dir(rc.corpus)
                                          : load_records_from_tsv(rc.corpus);
  const ApiWhitelist wl =
      rc.whitelist.empty() ? ApiWhitelist() : ApiWhitelist::from_file(rc.whitelist);
  const std::set<std::string> stopwords =
      rc.stopwords.empty() ? default_stopwords() : read_word_list(rc.stopwords);
  const std::vector<std::string> phrases = rc.autogen_phrases.empty()
                                               ? default_autogen_phrases()
                                               : read_phrase_list(rc.autogen_phrases);
  const CorpusConfig cc = corpus_config(rc);

  PrepStats stats;
  stats.total = static_cast<long>(records.size());
  std::vector<ProcessedExample> kept, autogen_pool;
  for (const MethodRecord& rec : records) {
    ProcessOutcome outcome = process_record(rec, wl, stopwords, cc);
    if (!outcome.example) {
      switch (outcome.reject) {
        case Reject::kNoSummary: ++stats.no_summary; break;
        case Reject::kNotEnglish: ++stats.not_english; break;
        case Reject::kTooShort: ++stats.too_short; break;
        case Reject::kBadFirstToken: ++stats.bad_first_token; break;
        case Reject::kParseError: ++stats.parse_failed; break;
        case Reject::kNone: break;
      }
      continue;
    }
    if (is_autogenerated(rec.file_text, phrases)) {
      ++stats.autogen;
      autogen_pool.push_back(std::move(*outcome.example));
    } else {
      ++stats.kept;
      kept.push_back(std::move(*outcome.example));
    }
  }
  std::vector<ProcessedExample> reinstated = reinstate_unique_autogen(autogen_pool);
  SplitCorpus split = split_by_project(kept, reinstated, cc, rc.seed, &stats);

  // vocabularies are built from the training split only
  std::vector<const std::vector<std::string>*> txt_seqs, ast_seqs, com_seqs;
  for (const ProcessedExample& ex : split.train) {
    txt_seqs.push_back(&ex.code_tokens);
    ast_seqs.push_back(&ex.sbt_tokens);
    ast_seqs.push_back(&ex.sbtao_tokens);
    com_seqs.push_back(&ex.comment_tokens);
  }
  Vocab txt = Vocab::build(txt_seqs, rc.txt_vocab);
  Vocab ast = Vocab::build(ast_seqs, rc.ast_vocab);
  Vocab com = Vocab::build(com_seqs, rc.com_vocab);

  const fs::path out = rc.out;
  fs::create_directories(out);
  atomic_write(out / "train.tsv", [&](const std::string& p) { write_examples_tsv(p, split.train); });
  atomic_write(out / "valid.tsv",
               [&](const std::string& p) { write_examples_tsv(p, split.validation); });
  atomic_write(out / "test.tsv", [&](const std::string& p) { write_examples_tsv(p, split.test); });
  atomic_write(out / "txt.vocab", [&](const std::string& p) { txt.write(p); });
  atomic_write(out / "ast.vocab", [&](const std::string& p) { ast.write(p); });
  atomic_write(out / "com.vocab", [&](const std::string& p) { com.write(p); });

  json result{
      {"stats",
       {{"total", stats.total},
        {"kept", stats.kept},
        {"autogen", stats.autogen},
        {"reinstated", stats.reinstated},
        {"reinstated_dropped", stats.reinstated_dropped},
        {"no_summary", stats.no_summary},
        {"not_english", stats.not_english},
        {"too_short", stats.too_short},
        {"bad_first_token", stats.bad_first_token},
        {"parse_failed", stats.parse_failed}}},
      {"splits",
       {{"train", split.train.size()},
        {"valid", split.validation.size()},
        {"test", split.test.size()}}},
      {"vocab_sizes", {{"txt", txt.size()}, {"ast", ast.size()}, {"com", com.size()}}}};
  write_run_json(out, rc, result);

  std::cerr << "prep: " << stats.total << " records -> kept " << stats.kept << ", autogenerated "
            << stats.autogen << " (reinstated " << stats.reinstated << ", dropped "
            << stats.reinstated_dropped << ")\n"
            << "prep: rejected no_summary=" << stats.no_summary
            << " not_english=" << stats.not_english << " too_short=" << stats.too_short
            << " bad_first_token=" << stats.bad_first_token
            << " parse_failed=" << stats.parse_failed << "\n"
            << "prep: splits train=" << split.train.size() << " valid=" << split.validation.size()
            << " test=" << split.test.size() << "\n";
}

void cmd_train(const RunConfig& rc) {
  require(!rc.data_dir.empty(), "train: --data is required");
  require(!rc.out.empty(), "train: --out is required");

  const Vocabs v = load_vocabs(rc.data_dir);
  ModelConfig mc;
  mc.kind = model_kind_from_string(rc.kind);
  mc.txtlen = rc.txtlen;
  mc.astlen = rc.astlen;
  mc.comlen = rc.comlen;
  mc.embdims = rc.embdims;
  mc.rnndims = rc.rnndims;
  mc.txtvocabsize = mc.kind == ModelKind::kSbt ? v.ast.size() : v.txt.size();
  mc.astvocabsize = v.ast.size();
  mc.comvocabsize = v.com.size();
  mc.validate();

  FramedDataset train_set = frame_for(mc, load_split(rc.data_dir, "train"), v, rc.sbt_mode);
  FramedDataset valid_set = frame_for(mc, load_split(rc.data_dir, "valid"), v, rc.sbt_mode);
  Model m = init_model(mc, rc.seed);

  fs::create_directories(rc.out);
  TrainConfig tc;
  tc.epochs = rc.epochs;
  tc.batch_size = rc.batch_size;
  tc.seed = rc.seed;
  tc.checkpoint_dir = rc.out;
  tc.progress = &std::cerr;
  TrainRunReport report = train(m, train_set, valid_set, v.com, tc);

  const fs::path model_path = fs::path(rc.out) / "model.ckpt";
  atomic_write(model_path, [&](const std::string& p) { save_checkpoint(p, m); });

  json epochs = json::array();
  for (const EpochStats& es : report.epochs)
    epochs.push_back({{"epoch", es.epoch},
                      {"train_loss", es.train_loss},
                      {"valid_loss", es.valid_loss},
                      {"valid_bleu", es.valid_bleu},
                      {"checkpoint", es.checkpoint}});
  write_run_json(rc.out, rc,
                 json{{"epochs", epochs},
                      {"selected_epoch", report.selected_epoch},
                      {"selected_checkpoint", report.selected_checkpoint},
                      {"pair_count", report.pair_count},
                      {"skipped_empty", report.skipped_empty},
                      {"model", model_path.string()}});
  std::cerr << "train: selected epoch " << report.selected_epoch << " of " << rc.epochs
            << ", model written to " << model_path.string() << "\n";
}

void cmd_predict(const RunConfig& rc) {
  require(rc.checkpoints.size() == 1, "predict: exactly one --checkpoint is required");
  require(!rc.data_dir.empty(), "predict: --data is required");
  require(!rc.out.empty(), "predict: --out is required");

  Model m = load_checkpoint(rc.checkpoints[0]);
  const Vocabs v = load_vocabs(rc.data_dir);
  check_vocab_match(m.config, v);
  FramedDataset ds = frame_for(m.config, load_split(rc.data_dir, rc.split), v, rc.sbt_mode);

  auto decoded = greedy_decode_all(m, ds, v.com, 0, rc.batch_size);
  const KeyedSeqs preds = keyed(ds.ids, decoded);
  atomic_write(rc.out, [&](const std::string& p) { write_keyed_seqs(p, preds); });
  if (!rc.refs_out.empty()) {
    const KeyedSeqs refs = keyed(ds.ids, ds.refs);
    atomic_write(rc.refs_out, [&](const std::string& p) { write_keyed_seqs(p, refs); });
  }
  write_run_json(dir_of(rc.out), rc, json{{"methods", ds.size()}});
  std::cerr << "predict: decoded " << ds.size() << " methods (" << rc.split << ") -> " << rc.out
            << "\n";
}

void cmd_ensemble(const RunConfig& rc) {
  require(rc.checkpoints.size() >= 2, "ensemble: at least two --checkpoint are required");
  require(!rc.data_dir.empty(), "ensemble: --data is required");
  require(!rc.out.empty(), "ensemble: --out is required");

  const Vocabs v = load_vocabs(rc.data_dir);
  const std::vector<ProcessedExample> examples = load_split(rc.data_dir, rc.split);

  std::deque<Model> models;
  std::deque<FramedDataset> datasets;
  std::vector<EnsembleMember> members;
  for (const std::string& path : rc.checkpoints) {
    models.push_back(load_checkpoint(path));
    const Model& m = models.back();
    check_vocab_match(m.config, v);
    datasets.push_back(frame_for(m.config, examples, v, rc.sbt_mode));
    const FramedDataset& ds = datasets.back();
    members.push_back({&m, &ds.txt, ds.has_ast() ? &ds.ast : nullptr});
  }

  auto decoded = ensemble_decode(members, v.com);
  const KeyedSeqs preds = keyed(datasets.front().ids, decoded);
  atomic_write(rc.out, [&](const std::string& p) { write_keyed_seqs(p, preds); });
  write_run_json(dir_of(rc.out), rc,
                 json{{"methods", datasets.front().size()},
                      {"members", rc.checkpoints.size()}});
  std::cerr << "ensemble: decoded " << datasets.front().size() << " methods with "
            << rc.checkpoints.size() << " members -> " << rc.out << "\n";
}

void cmd_eval(const RunConfig& rc) {
  require(!rc.preds.empty(), "eval: --preds is required");
  require(!rc.refs.empty(), "eval: --refs is required");
  require(!rc.out.empty(), "eval: --out is required");

  const KeyedSeqs preds = read_keyed_seqs(rc.preds);
  const KeyedSeqs refs = read_keyed_seqs(rc.refs);
  const EvalReport report = evaluate(preds, refs, smoothing_of(rc.smoothing));

  const fs::path out = rc.out;
  fs::create_directories(out);
  atomic_write(out / "eval.json", [&](const std::string& p) { write_eval_json(p, report); });
  atomic_write(out / "permethod.tsv",
               [&](const std::string& p) { write_permethod_tsv(p, report.per_method); });
  write_run_json(out, rc,
                 json{{"method_count", report.method_count},
                      {"composite", report.composite},
                      {"bleu_1", report.bleu_n[0]},
                      {"bleu_2", report.bleu_n[1]},
                      {"bleu_3", report.bleu_n[2]},
                      {"bleu_4", report.bleu_n[3]},
                      {"brevity_penalty", report.brevity_penalty},
                      {"first_word_accuracy", report.first_word_acc}});
  std::cerr << "eval: " << report.method_count << " methods, composite BLEU " << report.composite
            << " (B1 " << report.bleu_n[0] << ", B2 " << report.bleu_n[1] << ", B3 "
            << report.bleu_n[2] << ", B4 " << report.bleu_n[3] << ")\n";
}

void cmd_attention(const RunConfig& rc) {
  require(rc.checkpoints.size() == 1, "attention: exactly one --checkpoint is required");
  require(!rc.data_dir.empty(), "attention: --data is required");
  require(!rc.out.empty(), "attention: --out is required");
  require(rc.method_id >= 0, "attention: --id is required");

  Model m = load_checkpoint(rc.checkpoints[0]);
  const Vocabs v = load_vocabs(rc.data_dir);
  check_vocab_match(m.config, v);
  FramedDataset ds = frame_for(m.config, load_split(rc.data_dir, rc.split), v, rc.sbt_mode);

  int row = -1;
  for (int i = 0; i < ds.size(); ++i)
    if (ds.ids[i] == rc.method_id) {
      row = i;
      break;
    }
  if (row < 0) {
    std::string available;
    const int shown = std::min<int>(ds.size(), 25);
    for (int i = 0; i < shown; ++i) available += (i ? ", " : "") + std::to_string(ds.ids[i]);
    if (ds.size() > shown) available += ", ...";
    throw std::runtime_error("attention: no method with id " + std::to_string(rc.method_id) +
                             " in split '" + rc.split + "'; available ids: " + available);
  }

  // decode the summary, then replay the final prefix through one forward pass
  // to export the attention the decoder saw at every step
  const std::vector<std::string> summary = greedy_decode(m, ds, row, v.com);
  const ModelConfig& mc = m.config;
  IndexMatrix txt_row(1, ds.txt.cols), com_row(1, mc.comlen);
  for (int j = 0; j < ds.txt.cols; ++j) txt_row.at(0, j) = ds.txt.at(row, j);
  com_row.at(0, 0) = Vocab::kStart;
  for (std::size_t k = 0; k < summary.size() && static_cast<int>(k) + 1 < mc.comlen; ++k)
    com_row.at(0, static_cast<int>(k) + 1) = v.com.index_of(summary[k]);
  IndexMatrix ast_row;
  if (mc.uses_ast()) {
    ast_row = IndexMatrix(1, ds.ast.cols);
    for (int j = 0; j < ds.ast.cols; ++j) ast_row.at(0, j) = ds.ast.at(row, j);
  }
  const ForwardCache cache = forward(m, txt_row, ast_row, com_row);

  const fs::path out = rc.out;
  fs::create_directories(out);
  atomic_write_text(out / "txt_attn.csv", csv_of_slice(cache.txt_attn, mc.comlen, ds.txt.cols));
  if (mc.uses_ast())
    atomic_write_text(out / "ast_attn.csv", csv_of_slice(cache.ast_attn, mc.comlen, mc.astlen));

  std::string joined;
  for (const std::string& w : summary) joined += (joined.empty() ? "" : " ") + w;
  write_run_json(out, rc,
                 json{{"summary", joined},
                      {"rows", mc.comlen},
                      {"txt_cols", ds.txt.cols},
                      {"ast_cols", mc.uses_ast() ? mc.astlen : 0}});
  std::cerr << "attention: method " << rc.method_id << " -> \"" << joined << "\"; matrices in "
            << out.string() << "\n";
}

// --- argv front end ------------------------------------------------------------

int run_cli(int argc, const char* const* argv) {
  RunConfig rc;
  CLI::App app{"code summarization pipeline: prep, train, predict, eval, ensemble, attention"};
  app.require_subcommand(1);
  // config files use one [subcommand] section per command; flags win over
  // config values, config values win over defaults
  app.set_config("--config", "", "read option defaults from a config file");

  auto add_config = [](CLI::App* sub) { sub->fallthrough(); };
  auto add_lens = [&rc](CLI::App* sub) {
    sub->add_option("--txtlen", rc.txtlen, "code/text sequence length")->envname("CSUM_TXTLEN");
    sub->add_option("--astlen", rc.astlen, "SBT sequence length")->envname("CSUM_ASTLEN");
    sub->add_option("--comlen", rc.comlen, "comment sequence length")->envname("CSUM_COMLEN");
  };
  auto add_seed = [&rc](CLI::App* sub) {
    sub->add_option("--seed", rc.seed, "RNG seed")->envname("CSUM_SEED");
  };
  auto add_sbt_mode = [&rc](CLI::App* sub) {
    sub->add_option("--sbt-mode", rc.sbt_mode, "SBT stream for AST encoders")
        ->check(CLI::IsMember({"sbt", "sbtao"}))
        ->envname("CSUM_SBT_MODE");
  };
  auto add_data = [&rc](CLI::App* sub) {
    sub->add_option("--data", rc.data_dir, "prepared dataset directory")->required();
  };
  auto add_split = [&rc](CLI::App* sub) {
    sub->add_option("--split", rc.split, "dataset split")
        ->check(CLI::IsMember({"train", "valid", "test"}));
  };
  auto add_batch = [&rc](CLI::App* sub) {
    sub->add_option("--batch-size", rc.batch_size, "mini-batch size");
  };

  CLI::App* prep = app.add_subcommand("prep", "filter, parse, flatten and split a raw corpus");
  prep->add_option("--corpus", rc.corpus, "project tree or records TSV")->required();
  prep->add_option("--out", rc.out, "dataset output directory")->required();
  prep->add_option("--whitelist", rc.whitelist, "SBT-AO API whitelist file")
      ->envname("CSUM_WHITELIST");
  prep->add_option("--stopwords", rc.stopwords, "stopword list for the English filter");
  prep->add_option("--autogen-phrases", rc.autogen_phrases,
                   "phrases marking auto-generated files");
  prep->add_option("--txt-vocab", rc.txt_vocab, "code/text vocabulary cap");
  prep->add_option("--ast-vocab", rc.ast_vocab, "SBT vocabulary cap");
  prep->add_option("--com-vocab", rc.com_vocab, "comment vocabulary cap");
  add_lens(prep);
  add_seed(prep);
  add_config(prep);

  CLI::App* train = app.add_subcommand("train", "train a model on a prepared dataset");
  add_data(train);
  train->add_option("--out", rc.out, "checkpoint output directory")->required();
  train->add_option("--kind", rc.kind, "attendgru | ast-attendgru | sbt")->envname("CSUM_KIND");
  train->add_option("--epochs", rc.epochs, "training epochs")->envname("CSUM_EPOCHS");
  train->add_option("--embdims", rc.embdims, "embedding width")->envname("CSUM_EMBDIMS");
  train->add_option("--rnndims", rc.rnndims, "GRU state width")->envname("CSUM_RNNDIMS");
  add_lens(train);
  add_seed(train);
  add_batch(train);
  add_sbt_mode(train);
  add_config(train);

  CLI::App* predict = app.add_subcommand("predict", "greedy-decode a split under one checkpoint");
  predict->add_option("--checkpoint", rc.checkpoints, "model checkpoint")->required();
  add_data(predict);
  add_split(predict);
  predict->add_option("--out", rc.out, "predictions TSV path")->required();
  predict->add_option("--refs-out", rc.refs_out, "also export framed references to this TSV");
  add_batch(predict);
  add_sbt_mode(predict);
  add_config(predict);

  CLI::App* eval = app.add_subcommand("eval", "score predictions against references");
  eval->add_option("--preds", rc.preds, "predictions TSV")->required();
  eval->add_option("--refs", rc.refs, "references TSV")->required();
  eval->add_option("--out", rc.out, "report output directory")->required();
  eval->add_option("--smoothing", rc.smoothing, "corpus BLEU smoothing")
      ->check(CLI::IsMember({"none", "epsilon"}))
      ->envname("CSUM_SMOOTHING");
  add_config(eval);

  CLI::App* ensemble = app.add_subcommand("ensemble", "mean-of-distributions ensemble decode");
  ensemble->add_option("--checkpoint", rc.checkpoints, "member checkpoints (repeat)")->required();
  add_data(ensemble);
  add_split(ensemble);
  ensemble->add_option("--out", rc.out, "predictions TSV path")->required();
  add_sbt_mode(ensemble);
  add_config(ensemble);

  CLI::App* attention = app.add_subcommand("attention", "export attention matrices for a method");
  attention->add_option("--checkpoint", rc.checkpoints, "model checkpoint")->required();
  add_data(attention);
  add_split(attention);
  attention->add_option("--id", rc.method_id, "method id to explain")->required();
  attention->add_option("--out", rc.out, "CSV output directory")->required();
  add_sbt_mode(attention);
  add_config(attention);

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (prep->parsed()) rc.subcommand = "prep", cmd_prep(rc);
    if (train->parsed()) rc.subcommand = "train", cmd_train(rc);
    if (predict->parsed()) rc.subcommand = "predict", cmd_predict(rc);
    if (eval->parsed()) rc.subcommand = "eval", cmd_eval(rc);
    if (ensemble->parsed()) rc.subcommand = "ensemble", cmd_ensemble(rc);
    if (attention->parsed()) rc.subcommand = "attention", cmd_attention(rc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("csum");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace csum
