#include "csum/infer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "csum/metrics.hpp"
#include "csum/rng.hpp"

namespace csum {

namespace {

const std::vector<std::string>& stream_tokens(const ProcessedExample& ex, Stream s) {
  switch (s) {
    case Stream::kCode: return ex.code_tokens;
    case Stream::kSbt: return ex.sbt_tokens;
    case Stream::kSbtAo: return ex.sbtao_tokens;
  }
  throw std::invalid_argument("stream_tokens: bad Stream value");
}

void fill_row(IndexMatrix& m, int row, const std::vector<std::int32_t>& values) {
  for (int j = 0; j < m.cols; ++j) m.at(row, j) = values[j];
}

IndexMatrix take_rows(const IndexMatrix& src, int begin, int end) {
  IndexMatrix out(end - begin, src.cols);
  std::copy(src.v.begin() + static_cast<std::size_t>(begin) * src.cols,
            src.v.begin() + static_cast<std::size_t>(end) * src.cols, out.v.begin());
  return out;
}

std::vector<std::string> ids_to_words(const std::vector<int>& ids, const Vocab& vocab) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(vocab.word_of(id));
  return out;
}

/// Gathered encoder/prefix matrices for a slice of training pairs.
struct PairBatch {
  IndexMatrix txt, ast, com;
  std::vector<int> targets;
};

PairBatch gather_pair_batch(const FramedDataset& ds, bool uses_ast,
                            const std::vector<TrainingPair>& pairs,
                            const std::vector<int>& order, std::size_t begin, std::size_t end) {
  const int n = static_cast<int>(end - begin);
  PairBatch b;
  b.txt = IndexMatrix(n, ds.txt.cols);
  if (uses_ast) b.ast = IndexMatrix(n, ds.ast.cols);
  b.com = IndexMatrix(n, ds.com.cols);
  b.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    const TrainingPair& p = pairs[order[begin + i]];
    for (int j = 0; j < ds.txt.cols; ++j) b.txt.at(i, j) = ds.txt.at(p.example, j);
    if (uses_ast)
      for (int j = 0; j < ds.ast.cols; ++j) b.ast.at(i, j) = ds.ast.at(p.example, j);
    fill_row(b.com, i, p.prefix);
    b.targets[i] = p.target;
  }
  return b;
}

/// Mean teacher-forced cross-entropy over a pair list, forward only.
double mean_xent(const Model& m, const FramedDataset& ds, const std::vector<TrainingPair>& pairs,
                 int batch_size) {
  if (pairs.empty()) return 0.0;
  std::vector<int> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  double loss_sum = 0;
  for (std::size_t begin = 0; begin < pairs.size(); begin += batch_size) {
    const std::size_t end = std::min(pairs.size(), begin + batch_size);
    PairBatch b = gather_pair_batch(ds, m.config.uses_ast(), pairs, order, begin, end);
    auto cache = forward(m, b.txt, b.ast, b.com);
    loss_sum += nn::cross_entropy(cache.probs, b.targets).loss * static_cast<double>(end - begin);
  }
  return loss_sum / static_cast<double>(pairs.size());
}

/// Greedy decode rows [begin, end) of a dataset in chunks.
std::vector<std::vector<std::string>> decode_rows(const Model& m, const FramedDataset& ds,
                                                  int begin, int end, const Vocab& com_vocab,
                                                  int maxlen, int batch_size) {
  std::vector<std::vector<std::string>> out;
  out.reserve(end - begin);
  for (int s = begin; s < end; s += batch_size) {
    const int e = std::min(end, s + batch_size);
    const IndexMatrix txt = take_rows(ds.txt, s, e);
    const IndexMatrix ast = ds.has_ast() ? take_rows(ds.ast, s, e) : IndexMatrix{};
    std::vector<StepFn> member = {[&m, &txt, &ast](const IndexMatrix& prefix) {
      return forward(m, txt, ast, prefix).probs;
    }};
    auto ids = decode_token_ids(member, e - s, m.config.comlen, m.config.comvocabsize, maxlen);
    for (const auto& row : ids) out.push_back(ids_to_words(row, com_vocab));
  }
  return out;
}

void check_geometry(const Model& m, const FramedDataset& ds, const char* what) {
  const ModelConfig& cfg = m.config;
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument(std::string(what) + ": " + msg);
  };
  if (ds.txt.cols != cfg.encoder_len())
    fail("encoder stream has " + std::to_string(ds.txt.cols) + " slots, model expects " +
         std::to_string(cfg.encoder_len()));
  if (ds.com.cols != cfg.comlen) fail("comment slots do not match comlen");
  if (cfg.uses_ast() && !ds.has_ast()) fail("model has an AST encoder but the dataset no AST stream");
  if (!cfg.uses_ast() && ds.has_ast()) fail("dataset has an AST stream the model cannot read");
  if (cfg.uses_ast() && ds.ast.cols != cfg.astlen) fail("AST slots do not match astlen");
}

}  // namespace

FramedDataset frame_dataset(const std::vector<ProcessedExample>& examples,
                            const ModelConfig& cfg, Stream primary, const Vocab& primary_vocab,
                            const Vocab& com_vocab, const Vocab* ast_vocab, Stream ast_stream) {
  cfg.validate();
  if (cfg.uses_ast() && ast_vocab == nullptr)
    throw std::invalid_argument("frame_dataset: ast_vocab required for an AST-encoder model");
  const int n = static_cast<int>(examples.size());
  FramedDataset ds;
  ds.ids.reserve(n);
  ds.refs.reserve(n);
  ds.txt = IndexMatrix(n, cfg.encoder_len());
  if (cfg.uses_ast()) ds.ast = IndexMatrix(n, cfg.astlen);
  ds.com = IndexMatrix(n, cfg.comlen);
  for (int i = 0; i < n; ++i) {
    const ProcessedExample& ex = examples[i];
    ds.ids.push_back(ex.id);
    fill_row(ds.txt, i, frame_sequence(stream_tokens(ex, primary), cfg.encoder_len(), primary_vocab));
    if (cfg.uses_ast())
      fill_row(ds.ast, i, frame_sequence(stream_tokens(ex, ast_stream), cfg.astlen, *ast_vocab));
    fill_row(ds.com, i, frame_sequence(ex.comment_tokens, cfg.comlen, com_vocab));
    std::vector<std::string> ref;
    for (const std::string& w : ex.comment_tokens)
      if (w != Vocab::start_word() && w != Vocab::end_word()) ref.push_back(w);
    ds.refs.push_back(std::move(ref));
  }
  return ds;
}

std::vector<TrainingPair> expand_pairs(const FramedDataset& ds, int row) {
  const int comlen = ds.com.cols;
  std::vector<TrainingPair> out;
  for (int k = 1; k < comlen; ++k) {
    const std::int32_t target = ds.com.at(row, k);
    if (target == Vocab::kPad) break;
    TrainingPair p;
    p.example = row;
    p.prefix.assign(comlen, Vocab::kPad);
    for (int j = 0; j < k; ++j) p.prefix[j] = ds.com.at(row, j);
    p.target = target;
    out.push_back(std::move(p));
    if (target == Vocab::kEnd) break;
  }
  return out;
}

std::vector<TrainingPair> expand_all_pairs(const FramedDataset& ds) {
  std::vector<TrainingPair> out;
  for (int row = 0; row < ds.size(); ++row) {
    auto pairs = expand_pairs(ds, row);
    out.insert(out.end(), std::make_move_iterator(pairs.begin()),
               std::make_move_iterator(pairs.end()));
  }
  return out;
}

std::vector<std::vector<int>> decode_token_ids(const std::vector<StepFn>& members, int batch,
                                               int comlen, int vocab_size, int maxlen) {
  if (members.empty()) throw std::invalid_argument("decode_token_ids: no members");
  if (batch < 1) throw std::invalid_argument("decode_token_ids: empty batch");
  if (comlen < 2) throw std::invalid_argument("decode_token_ids: comlen must be >= 2");
  if (vocab_size <= Vocab::kEnd)
    throw std::invalid_argument("decode_token_ids: vocabulary lacks the reserved tokens");

  const int cap = std::min(maxlen > 0 ? maxlen : comlen - 1, comlen - 1);
  IndexMatrix prefix(batch, comlen);
  for (int i = 0; i < batch; ++i) prefix.at(i, 0) = Vocab::kStart;

  std::vector<std::vector<int>> out(batch);
  std::vector<char> done(batch, 0);
  std::vector<double> sum(static_cast<std::size_t>(batch) * vocab_size);
  const double k = static_cast<double>(members.size());

  for (int step = 1; step <= cap; ++step) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (const StepFn& fn : members) {
      const Tensor probs = fn(prefix);
      if (probs.rank() != 2 || probs.dim(0) != batch || probs.dim(1) != vocab_size)
        throw ShapeError("decode_token_ids: member returned shape " + probs.shape_str());
      for (std::size_t i = 0; i < probs.numel(); ++i) sum[i] += probs.raw()[i];
    }
    bool all_done = true;
    for (int i = 0; i < batch; ++i) {
      if (done[i]) continue;
      const double* row = sum.data() + static_cast<std::size_t>(i) * vocab_size;
      // argmax of the element-wise mean; padding and start tokens are never
      // emitted, ties break to the lowest index via the strict comparison
      int best = -1;
      double bestv = 0;
      for (int j = 0; j < vocab_size; ++j) {
        if (j == Vocab::kPad || j == Vocab::kStart) continue;
        const double v = row[j] / k;
        if (best < 0 || v > bestv) {
          best = j;
          bestv = v;
        }
      }
      if (best == Vocab::kEnd) {
        done[i] = 1;
        continue;
      }
      out[i].push_back(best);
      prefix.at(i, step) = best;
      all_done = false;
    }
    if (all_done) break;
  }
  return out;
}

std::vector<std::vector<std::string>> greedy_decode_all(const Model& m, const FramedDataset& ds,
                                                        const Vocab& com_vocab, int maxlen,
                                                        int batch_size) {
  check_geometry(m, ds, "greedy_decode_all");
  if (batch_size < 1) throw std::invalid_argument("greedy_decode_all: bad batch size");
  return decode_rows(m, ds, 0, ds.size(), com_vocab, maxlen, batch_size);
}

std::vector<std::string> greedy_decode(const Model& m, const FramedDataset& ds, int row,
                                       const Vocab& com_vocab, int maxlen) {
  check_geometry(m, ds, "greedy_decode");
  if (row < 0 || row >= ds.size()) throw std::out_of_range("greedy_decode: row out of range");
  return decode_rows(m, ds, row, row + 1, com_vocab, maxlen, 1).front();
}

std::vector<std::vector<std::string>> ensemble_decode(const std::vector<EnsembleMember>& members,
                                                      const Vocab& com_vocab, int maxlen) {
  if (members.empty()) throw std::invalid_argument("ensemble_decode: no members");
  static const IndexMatrix kNoAst{};
  const ModelConfig& first = members[0].model->config;
  const int batch = members[0].txt->rows;

  std::vector<StepFn> fns;
  fns.reserve(members.size());
  for (const EnsembleMember& em : members) {
    if (em.model == nullptr || em.txt == nullptr)
      throw std::invalid_argument("ensemble_decode: member missing model or encoder inputs");
    const ModelConfig& cfg = em.model->config;
    if (cfg.comvocabsize != first.comvocabsize)
      throw std::invalid_argument("ensemble_decode: comment vocabulary size mismatch (" +
                                  std::to_string(cfg.comvocabsize) + " vs " +
                                  std::to_string(first.comvocabsize) + ")");
    if (cfg.comlen != first.comlen)
      throw std::invalid_argument("ensemble_decode: comlen mismatch");
    if (em.txt->rows != batch) throw std::invalid_argument("ensemble_decode: batch mismatch");
    if (cfg.uses_ast() && (em.ast == nullptr || em.ast->rows != batch))
      throw std::invalid_argument("ensemble_decode: member needs aligned AST inputs");
    const Model* mp = em.model;
    const IndexMatrix* tp = em.txt;
    const IndexMatrix* ap = cfg.uses_ast() ? em.ast : &kNoAst;
    fns.push_back(
        [mp, tp, ap](const IndexMatrix& prefix) { return forward(*mp, *tp, *ap, prefix).probs; });
  }

  auto ids = decode_token_ids(fns, batch, first.comlen, first.comvocabsize, maxlen);
  std::vector<std::vector<std::string>> out;
  out.reserve(ids.size());
  for (const auto& row : ids) out.push_back(ids_to_words(row, com_vocab));
  return out;
}

TrainRunReport train(Model& m, const FramedDataset& train_set, const FramedDataset& valid_set,
                     const Vocab& com_vocab, const TrainConfig& cfg) {
  m.config.validate();
  check_geometry(m, train_set, "train");
  if (valid_set.size() > 0) check_geometry(m, valid_set, "train (validation set)");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");

  TrainRunReport report;
  std::vector<TrainingPair> pairs;
  for (int row = 0; row < train_set.size(); ++row) {
    auto row_pairs = expand_pairs(train_set, row);
    if (row_pairs.empty()) {
      ++report.skipped_empty;
      continue;
    }
    pairs.insert(pairs.end(), std::make_move_iterator(row_pairs.begin()),
                 std::make_move_iterator(row_pairs.end()));
  }
  report.pair_count = static_cast<long>(pairs.size());
  if (pairs.empty()) throw std::invalid_argument("train: dataset expanded to zero pairs");

  const std::vector<TrainingPair> valid_pairs = expand_all_pairs(valid_set);
  const int valid_decode_count =
      std::min(valid_set.size(), std::max(0, cfg.validation_cap));

  nn::Adam adam(cfg.adam);
  Rng rng(cfg.seed);
  std::vector<int> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0;
    int batch_index = 0;
    for (std::size_t begin = 0; begin < pairs.size(); begin += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(pairs.size(), begin + cfg.batch_size);
      PairBatch b = gather_pair_batch(train_set, m.config.uses_ast(), pairs, order, begin, end);
      auto cache = forward(m, b.txt, b.ast, b.com);
      auto xr = nn::cross_entropy(cache.probs, b.targets);
      if (!std::isfinite(xr.loss))
        throw std::runtime_error(
            "train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
            std::to_string(batch_index) + " (parameter norm " +
            std::to_string(m.params.value_norm()) + ")");
      m.params.zero_grads();
      backward(m, cache, xr.d_logits);
      adam.step(m.params);
      loss_sum += xr.loss * static_cast<double>(end - begin);
    }

    EpochStats es;
    es.epoch = epoch;
    es.train_loss = loss_sum / static_cast<double>(pairs.size());
    es.valid_loss = mean_xent(m, valid_set, valid_pairs, cfg.batch_size);
    if (valid_decode_count > 0) {
      auto cands = decode_rows(m, valid_set, 0, valid_decode_count, com_vocab, 0, cfg.batch_size);
      const std::vector<std::vector<std::string>> refs(
          valid_set.refs.begin(), valid_set.refs.begin() + valid_decode_count);
      es.valid_bleu = corpus_bleu(cands, refs);
    }
    if (!cfg.checkpoint_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch-%03d.ckpt", epoch);
      es.checkpoint = (std::filesystem::path(cfg.checkpoint_dir) / name).string();
      save_checkpoint(es.checkpoint, m);
    }
    if (cfg.progress) {
      (*cfg.progress) << "epoch " << epoch << "/" << cfg.epochs << " train_loss=" << es.train_loss
                      << " valid_loss=" << es.valid_loss << " valid_bleu=" << es.valid_bleu
                      << "\n";
      cfg.progress->flush();
    }
    report.epochs.push_back(es);
    if (cfg.early_stop && cfg.early_stop(es)) break;
  }

  int best = 0;
  for (std::size_t i = 1; i < report.epochs.size(); ++i)
    if (report.epochs[i].valid_bleu > report.epochs[best].valid_bleu) best = static_cast<int>(i);
  report.selected_epoch = report.epochs[best].epoch;
  report.selected_checkpoint = report.epochs[best].checkpoint;
  if (!report.selected_checkpoint.empty() &&
      report.selected_epoch != report.epochs.back().epoch)
    m = load_checkpoint(report.selected_checkpoint);
  return report;
}

}  // namespace csum
