#pragma once
// Model assembly: three GRU encoder-decoder architectures built from the
// nn-core ops.
//
//   attendgru      — code/text encoder + attention decoder
//   ast-attendgru  — adds a second encoder over the flattened AST, whose
//                    final state seeds the code/text encoder and whose
//                    states feed a second attention mechanism
//   sbt            — same single-encoder network as attendgru, but reading
//                    the SBT token stream (AST vocabulary, astlen slots)
//
// Everything is templated on the scalar type so the float production path
// and the double gradient-check path share one implementation.

#include <stdexcept>
#include <string>
#include <vector>

#include "csum/nn.hpp"
#include "csum/rng.hpp"
#include "csum/tensor.hpp"

namespace csum {

enum class ModelKind { kAttendGru, kAstAttendGru, kSbt };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);  // throws std::invalid_argument

struct ModelConfig {
  ModelKind kind = ModelKind::kAstAttendGru;
  int txtlen = 100;
  int astlen = 100;
  int comlen = 13;
  int embdims = 100;
  int rnndims = 256;
  int txtvocabsize = 10000;
  int astvocabsize = 10000;
  int comvocabsize = 10000;

  bool uses_ast() const { return kind == ModelKind::kAstAttendGru; }
  /// Input geometry of the single encoder: attendgru reads the code/text
  /// stream, sbt reads the SBT stream (AST vocabulary).
  int encoder_len() const { return kind == ModelKind::kSbt ? astlen : txtlen; }
  int encoder_vocab() const { return kind == ModelKind::kSbt ? astvocabsize : txtvocabsize; }
  /// Width of the per-step context row fed to the time-distributed dense:
  /// [txt_context | ast_context | decoder] or [context | decoder].
  int context_width() const { return (uses_ast() ? 3 : 2) * rnndims; }
  int flat_width() const { return comlen * rnndims; }

  void validate() const;  // throws std::invalid_argument
};

template <class T>
struct ModelInstanceT {
  ModelConfig config;
  nn::ParamSetT<T> params;
};
using Model = ModelInstanceT<float>;
using ModelD = ModelInstanceT<double>;

/// Every intermediate of one forward pass, kept for backprop and inspection
/// (shape traces, attention heatmaps).
template <class T>
struct ForwardCacheT {
  IndexMatrix txt_idx;  // encoder token indices (code/text, or SBT for kind=sbt)
  IndexMatrix ast_idx;  // empty unless kind=ast-attendgru
  IndexMatrix com_idx;  // comment prefix indices

  TensorT<T> txt_emb, ast_emb, com_emb;       // [b, len, embdims]
  nn::GruCache<T> ast_gru, txt_gru, dec_gru;  // .states = all hidden states
  TensorT<T> sa;  // AST encoder final state, handed to the code/text encoder
  TensorT<T> st;  // code/text encoder final state, handed to the decoder

  TensorT<T> txt_scores, txt_attn, txt_ctx;  // [b, comlen, enclen] / …ctx [b, comlen, rnndims]
  TensorT<T> ast_scores, ast_attn, ast_ctx;  // empty unless kind=ast-attendgru

  TensorT<T> context;       // [b, comlen, context_width]
  TensorT<T> td_in;         // context viewed as [b*comlen, context_width]
  TensorT<T> td_pre;        // dense pre-activation [b*comlen, rnndims]
  TensorT<T> td_act;        // relu(td_pre)
  TensorT<T> flat;          // td_act viewed as [b, comlen*rnndims]
  TensorT<T> logits, probs; // [b, comvocabsize]
};
using ForwardCache = ForwardCacheT<float>;
using ForwardCacheD = ForwardCacheT<double>;

namespace detail {

/// Allocate every parameter (zero-filled) for the given architecture.
template <class T>
void add_params(nn::ParamSetT<T>& ps, const ModelConfig& cfg) {
  ps.add("txt_embedding", {cfg.encoder_vocab(), cfg.embdims});
  ps.add("com_embedding", {cfg.comvocabsize, cfg.embdims});
  nn::add_gru_params(ps, "txt_gru", cfg.embdims, cfg.rnndims);
  nn::add_gru_params(ps, "dec_gru", cfg.embdims, cfg.rnndims);
  if (cfg.uses_ast()) {
    ps.add("ast_embedding", {cfg.astvocabsize, cfg.embdims});
    nn::add_gru_params(ps, "ast_gru", cfg.embdims, cfg.rnndims);
  }
  ps.add("td_dense.w", {cfg.context_width(), cfg.rnndims});
  ps.add("td_dense.b", {cfg.rnndims});
  ps.add("out_dense.w", {cfg.flat_width(), cfg.comvocabsize});
  ps.add("out_dense.b", {cfg.comvocabsize});
}

template <class T>
void init_params(nn::ParamSetT<T>& ps, const ModelConfig& cfg, unsigned long seed) {
  add_params(ps, cfg);
  // One RNG stream, consumed in sorted-name order, makes initialization a
  // pure function of (config, seed). Embeddings draw from U(-0.05, 0.05),
  // rank-2 kernels from Glorot, biases stay zero.
  Rng rng(seed);
  for (const std::string& name : ps.names()) {
    TensorT<T>& t = ps.value(name);
    const bool embedding = name.size() >= 10 && name.rfind("_embedding") == name.size() - 10;
    if (embedding) {
      nn::init_uniform(t, rng, 0.05);
    } else if (t.rank() == 2) {
      nn::init_glorot_uniform(t, rng);
    }
  }
}

inline void check_batch(const IndexMatrix& idx, int rows, int cols, const char* what) {
  if (idx.rows != rows || idx.cols != cols)
    throw ShapeError(std::string("forward: ") + what + " expected " + std::to_string(rows) +
                     "x" + std::to_string(cols) + ", got " + std::to_string(idx.rows) + "x" +
                     std::to_string(idx.cols));
}

}  // namespace detail

template <class T>
ModelInstanceT<T> init_model_t(const ModelConfig& config, unsigned long seed) {
  config.validate();
  ModelInstanceT<T> m;
  m.config = config;
  detail::init_params(m.params, config, seed);
  return m;
}

inline Model init_model(const ModelConfig& config, unsigned long seed) {
  return init_model_t<float>(config, seed);
}

/// Unified forward pass. `ast_idx` is required for kind=ast-attendgru and
/// must be empty (0x0) otherwise. Returns the full intermediate cache;
/// `.probs` rows are the next-word distributions.
template <class T>
ForwardCacheT<T> forward(const ModelInstanceT<T>& m, const IndexMatrix& txt_idx,
                         const IndexMatrix& ast_idx, const IndexMatrix& com_idx) {
  const ModelConfig& cfg = m.config;
  const int b = com_idx.rows;
  if (b < 1) throw ShapeError("forward: empty batch");
  detail::check_batch(com_idx, b, cfg.comlen, "com_idx");
  detail::check_batch(txt_idx, b, cfg.encoder_len(), "txt_idx");
  if (cfg.uses_ast())
    detail::check_batch(ast_idx, b, cfg.astlen, "ast_idx");
  else if (ast_idx.rows != 0)
    throw ShapeError("forward: ast_idx given to a model without an AST encoder");

  const nn::ParamSetT<T>& ps = m.params;
  ForwardCacheT<T> c;
  c.txt_idx = txt_idx;
  c.ast_idx = ast_idx;
  c.com_idx = com_idx;

  TensorT<T> zero_state({b, cfg.rnndims});
  if (cfg.uses_ast()) {
    c.ast_emb = nn::embedding_forward(ast_idx, ps.value("ast_embedding"));
    c.ast_gru = nn::gru_forward(c.ast_emb, zero_state, ps, "ast_gru");
    c.sa = nn::gru_last_state(c.ast_gru);
  }
  c.txt_emb = nn::embedding_forward(txt_idx, ps.value("txt_embedding"));
  c.txt_gru = nn::gru_forward(c.txt_emb, cfg.uses_ast() ? c.sa : zero_state, ps, "txt_gru");
  c.st = nn::gru_last_state(c.txt_gru);

  c.com_emb = nn::embedding_forward(com_idx, ps.value("com_embedding"));
  c.dec_gru = nn::gru_forward(c.com_emb, c.st, ps, "dec_gru");

  const TensorT<T>& decout = c.dec_gru.states;
  const TensorT<T>& txtout = c.txt_gru.states;
  c.txt_scores = nn::batched_dot(decout, txtout, 2, 2);
  c.txt_attn = nn::softmax_rows(c.txt_scores);
  c.txt_ctx = nn::batched_dot(c.txt_attn, txtout, 2, 1);

  std::vector<const TensorT<T>*> parts;
  if (cfg.uses_ast()) {
    const TensorT<T>& astout = c.ast_gru.states;
    c.ast_scores = nn::batched_dot(decout, astout, 2, 2);
    c.ast_attn = nn::softmax_rows(c.ast_scores);
    c.ast_ctx = nn::batched_dot(c.ast_attn, astout, 2, 1);
    parts = {&c.txt_ctx, &c.ast_ctx, &decout};
  } else {
    parts = {&c.txt_ctx, &decout};
  }
  c.context = nn::concat_lastaxis(parts);

  c.td_in = c.context;
  c.td_in.reshape({b * cfg.comlen, cfg.context_width()});
  c.td_pre = nn::dense_forward(c.td_in, ps.value("td_dense.w"), ps.value("td_dense.b"));
  c.td_act = nn::relu_forward(c.td_pre);
  c.flat = c.td_act;
  c.flat.reshape({b, cfg.flat_width()});
  c.logits = nn::dense_forward(c.flat, ps.value("out_dense.w"), ps.value("out_dense.b"));
  c.probs = nn::softmax_rows(c.logits);
  return c;
}

template <class T>
ForwardCacheT<T> forward_attendgru(const ModelInstanceT<T>& m, const IndexMatrix& txt_idx,
                                   const IndexMatrix& com_idx) {
  if (m.config.kind != ModelKind::kAttendGru)
    throw std::invalid_argument("forward_attendgru: model kind is " + to_string(m.config.kind));
  return forward(m, txt_idx, IndexMatrix{}, com_idx);
}

template <class T>
ForwardCacheT<T> forward_sbt(const ModelInstanceT<T>& m, const IndexMatrix& sbt_idx,
                             const IndexMatrix& com_idx) {
  if (m.config.kind != ModelKind::kSbt)
    throw std::invalid_argument("forward_sbt: model kind is " + to_string(m.config.kind));
  return forward(m, sbt_idx, IndexMatrix{}, com_idx);
}

template <class T>
ForwardCacheT<T> forward_ast_attendgru(const ModelInstanceT<T>& m, const IndexMatrix& txt_idx,
                                       const IndexMatrix& ast_idx, const IndexMatrix& com_idx) {
  if (m.config.kind != ModelKind::kAstAttendGru)
    throw std::invalid_argument("forward_ast_attendgru: model kind is " +
                                to_string(m.config.kind));
  return forward(m, txt_idx, ast_idx, com_idx);
}

/// Backprop from d_logits (e.g. XentResult::d_logits) through the whole
/// network. Parameter gradients accumulate into m.params; call
/// m.params.zero_grads() between optimizer steps.
template <class T>
void backward(ModelInstanceT<T>& m, const ForwardCacheT<T>& c, const TensorT<T>& d_logits) {
  const ModelConfig& cfg = m.config;
  nn::ParamSetT<T>& ps = m.params;
  const int b = c.com_idx.rows;

  // output head
  TensorT<T> d_flat({b, cfg.flat_width()});
  nn::dense_backward(c.flat, ps.value("out_dense.w"), d_logits, ps.grad("out_dense.w"),
                     ps.grad("out_dense.b"), &d_flat);
  d_flat.reshape({b * cfg.comlen, cfg.rnndims});
  TensorT<T> d_td_pre = nn::relu_backward(c.td_pre, d_flat);
  TensorT<T> d_context({b * cfg.comlen, cfg.context_width()});
  nn::dense_backward(c.td_in, ps.value("td_dense.w"), d_td_pre, ps.grad("td_dense.w"),
                     ps.grad("td_dense.b"), &d_context);
  d_context.reshape({b, cfg.comlen, cfg.context_width()});

  // context concat: [txt_ctx | ast_ctx | decout] or [txt_ctx | decout]
  const TensorT<T>& decout = c.dec_gru.states;
  const TensorT<T>& txtout = c.txt_gru.states;
  TensorT<T> d_txt_ctx(c.txt_ctx.shape());
  TensorT<T> d_decout(decout.shape());
  TensorT<T> d_txtout(txtout.shape());
  TensorT<T> d_ast_ctx, d_astout;
  std::vector<TensorT<T>*> parts;
  if (cfg.uses_ast()) {
    d_ast_ctx = TensorT<T>(c.ast_ctx.shape());
    d_astout = TensorT<T>(c.ast_gru.states.shape());
    parts = {&d_txt_ctx, &d_ast_ctx, &d_decout};
  } else {
    parts = {&d_txt_ctx, &d_decout};
  }
  nn::split_lastaxis(d_context, parts);

  // code/text attention: ctx = attn·txtout, attn = softmax(decout·txtoutᵀ)
  TensorT<T> d_txt_attn(c.txt_attn.shape());
  nn::batched_dot_backward(c.txt_attn, txtout, 2, 1, d_txt_ctx, d_txt_attn, d_txtout);
  TensorT<T> d_txt_scores = nn::softmax_rows_backward(c.txt_attn, d_txt_attn);
  nn::batched_dot_backward(decout, txtout, 2, 2, d_txt_scores, d_decout, d_txtout);

  if (cfg.uses_ast()) {
    const TensorT<T>& astout = c.ast_gru.states;
    TensorT<T> d_ast_attn(c.ast_attn.shape());
    nn::batched_dot_backward(c.ast_attn, astout, 2, 1, d_ast_ctx, d_ast_attn, d_astout);
    TensorT<T> d_ast_scores = nn::softmax_rows_backward(c.ast_attn, d_ast_attn);
    nn::batched_dot_backward(decout, astout, 2, 2, d_ast_scores, d_decout, d_astout);
  }

  // decoder GRU -> comment embedding + d_st
  TensorT<T> d_com_emb(c.com_emb.shape());
  TensorT<T> d_st(c.st.shape());
  nn::gru_backward(c.dec_gru, d_decout, static_cast<const TensorT<T>*>(nullptr), ps, "dec_gru",
                   &d_com_emb, &d_st);
  nn::embedding_backward(c.com_idx, d_com_emb, ps.grad("com_embedding"));

  // code/text GRU -> txt embedding + d_sa (initial state)
  TensorT<T> d_txt_emb(c.txt_emb.shape());
  TensorT<T> d_sa({b, cfg.rnndims});
  nn::gru_backward(c.txt_gru, d_txtout, &d_st, ps, "txt_gru", &d_txt_emb, &d_sa);
  nn::embedding_backward(c.txt_idx, d_txt_emb, ps.grad("txt_embedding"));

  if (cfg.uses_ast()) {
    TensorT<T> d_ast_emb(c.ast_emb.shape());
    nn::gru_backward(c.ast_gru, d_astout, &d_sa, ps, "ast_gru", &d_ast_emb,
                     static_cast<TensorT<T>*>(nullptr));
    nn::embedding_backward(c.ast_idx, d_ast_emb, ps.grad("ast_embedding"));
  }
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------
// Bit-exact binary format:
//   magic "CSUMCKPT" | version u32 LE | config-block length u32 LE |
//   config block (UTF-8 "key=value\n" lines) | tensor records to EOF.
// Tensor record: name length u32 | name bytes | rank u32 | dims u32 each |
// raw float32 LE values.

inline constexpr char kCheckpointMagic[8] = {'C', 'S', 'U', 'M', 'C', 'K', 'P', 'T'};
inline constexpr unsigned kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::string& path, const Model& m);
Model load_checkpoint(const std::string& path);  // throws CheckpointError

}  // namespace csum
