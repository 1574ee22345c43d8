#pragma once
// Training-pair expansion, the train/validate/select loop, greedy decoding,
// and ensemble decoding.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "csum/corpus.hpp"
#include "csum/models.hpp"
#include "csum/nn.hpp"
#include "csum/tensor.hpp"

namespace csum {

/// Which token stream of a ProcessedExample feeds an encoder slot.
enum class Stream { kCode, kSbt, kSbtAo };

/// A split framed into index matrices, ready for batching. `txt` holds the
/// primary encoder stream (code/text for attendgru and ast-attendgru, the
/// SBT stream for the sbt kind, SBT-AO in challenge mode); `ast` holds the
/// secondary AST stream and is 0x0 unless the model has an AST encoder.
struct FramedDataset {
  std::vector<long> ids;
  IndexMatrix txt;
  IndexMatrix ast;
  IndexMatrix com;
  std::vector<std::vector<std::string>> refs;  // comment words, delimiters stripped

  int size() const { return static_cast<int>(ids.size()); }
  bool has_ast() const { return ast.rows != 0; }
};

/// Frame one split for a model geometry. `primary` is framed to
/// cfg.encoder_len() with `primary_vocab`; when cfg.uses_ast(), `ast_stream`
/// is framed to cfg.astlen with `ast_vocab` (required then).
FramedDataset frame_dataset(const std::vector<ProcessedExample>& examples,
                            const ModelConfig& cfg, Stream primary, const Vocab& primary_vocab,
                            const Vocab& com_vocab, const Vocab* ast_vocab = nullptr,
                            Stream ast_stream = Stream::kSbtAo);

// ---------------------------------------------------------------------------
// teacher-forcing pairs
// ---------------------------------------------------------------------------

/// One next-word prediction sample: the comment prefix (position 0 is the
/// start token, unknown positions are padding index 0) plus the gold target.
struct TrainingPair {
  int example = 0;  // row into the FramedDataset
  std::vector<std::int32_t> prefix;
  std::int32_t target = 0;
};

/// One pair per comment position 1..L (L = word count including the end
/// token); an all-padding comment yields zero pairs.
std::vector<TrainingPair> expand_pairs(const FramedDataset& ds, int row);
std::vector<TrainingPair> expand_all_pairs(const FramedDataset& ds);

// ---------------------------------------------------------------------------
// decoding
// ---------------------------------------------------------------------------

/// One decoding step: comment prefix indices [b, comlen] -> next-word
/// distribution [b, vocab]. The seam lets tests drive the decoder loop with
/// hand-crafted distributions.
using StepFn = std::function<Tensor(const IndexMatrix& com_prefix)>;

/// Shared decoder loop: at each step average the members' distributions
/// element-wise, take the argmax (padding and start tokens masked, ties to
/// the lowest index), feed the chosen token to every member, stop at the end
/// token or after `maxlen` words (maxlen<=0 means the prefix capacity,
/// comlen-1). Returns emitted token ids per row, delimiters excluded.
std::vector<std::vector<int>> decode_token_ids(const std::vector<StepFn>& members, int batch,
                                               int comlen, int vocab_size, int maxlen = 0);

/// Greedy decode every row of a framed dataset under one model.
std::vector<std::vector<std::string>> greedy_decode_all(const Model& m, const FramedDataset& ds,
                                                        const Vocab& com_vocab, int maxlen = 0,
                                                        int batch_size = 200);

/// Greedy decode a single example (row `row` of the dataset).
std::vector<std::string> greedy_decode(const Model& m, const FramedDataset& ds, int row,
                                       const Vocab& com_vocab, int maxlen = 0);

/// One ensemble member: a model plus its encoder inputs. Rows must align
/// across members (row i everywhere describes the same method).
struct EnsembleMember {
  const Model* model = nullptr;
  const IndexMatrix* txt = nullptr;
  const IndexMatrix* ast = nullptr;  // required when the model uses an AST encoder
};

/// Step-wise ensemble: element-wise mean of the members' distributions, one
/// shared argmax fed back to every member. Members must agree on comlen and
/// comment vocabulary size (std::invalid_argument otherwise).
std::vector<std::vector<std::string>> ensemble_decode(const std::vector<EnsembleMember>& members,
                                                      const Vocab& com_vocab, int maxlen = 0);

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

struct TrainConfig {
  int epochs = 10;
  int batch_size = 200;
  unsigned long seed = 1;
  int validation_cap = 2000;    // greedy-decode at most this many validation methods
  std::string checkpoint_dir;   // empty: keep no per-epoch checkpoint files
  nn::AdamConfig adam;
  std::ostream* progress = nullptr;  // per-epoch progress lines (cli passes stderr)
  /// Called after each epoch's validation; return true to stop early.
  std::function<bool(const struct EpochStats&)> early_stop;
};

struct EpochStats {
  int epoch = 0;          // 1-based
  double train_loss = 0;  // mean cross-entropy per pair
  double valid_loss = 0;
  double valid_bleu = 0;  // composite corpus BLEU on the capped subsample
  std::string checkpoint;
};

struct TrainRunReport {
  std::vector<EpochStats> epochs;
  int selected_epoch = 0;  // argmax of valid_bleu, earliest on ties
  std::string selected_checkpoint;
  long pair_count = 0;
  int skipped_empty = 0;  // examples that expanded to zero pairs
};

/// Seeded shuffled mini-batch training with per-epoch validation.
/// Checkpoints are written per epoch when checkpoint_dir is set, and the
/// selected (best-validation) checkpoint is reloaded into `m` at the end;
/// without a checkpoint_dir, `m` keeps the final epoch's weights.
/// Throws std::runtime_error with diagnostics if the loss turns non-finite.
TrainRunReport train(Model& m, const FramedDataset& train_set, const FramedDataset& valid_set,
                     const Vocab& com_vocab, const TrainConfig& cfg);

}  // namespace csum
