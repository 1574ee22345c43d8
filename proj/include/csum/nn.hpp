#pragma once

// Neural-net ops with analytic gradients: embedding, GRU, dense layers,
// softmax, batched attention contractions, concatenation, cross-entropy,
// Adam updates and a finite-difference gradient checker. Everything is
// templated on the scalar type: float for training, double for checks.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "csum/kernels.hpp"
#include "csum/rng.hpp"
#include "csum/tensor.hpp"

namespace csum::nn {

template <class T>
struct ParamT {
  TensorT<T> value;
  TensorT<T> grad;
};

template <class T>
class ParamSetT {
public:
  TensorT<T>& add(const std::string& name, std::vector<int> shape) {
    if (params_.count(name)) throw std::runtime_error("duplicate parameter: " + name);
    ParamT<T> p;
    p.value = TensorT<T>(shape);
    p.grad = TensorT<T>(std::move(shape));
    auto [it, ok] = params_.emplace(name, std::move(p));
    (void)ok;
    return it->second.value;
  }

  bool has(const std::string& name) const { return params_.count(name) != 0; }

  ParamT<T>& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::runtime_error("unknown parameter: " + name);
    return it->second;
  }
  const ParamT<T>& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::runtime_error("unknown parameter: " + name);
    return it->second;
  }

  TensorT<T>& value(const std::string& name) { return at(name).value; }
  const TensorT<T>& value(const std::string& name) const { return at(name).value; }
  TensorT<T>& grad(const std::string& name) { return at(name).grad; }

  void zero_grads() {
    for (auto& [name, p] : params_) p.grad.fill(T(0));
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, p] : params_) out.push_back(name);
    return out;  // std::map keeps them sorted
  }

  std::size_t size() const { return params_.size(); }

  double value_norm() const {
    double s = 0;
    for (const auto& [name, p] : params_)
      for (T v : p.value.raw()) s += static_cast<double>(v) * v;
    return std::sqrt(s);
  }

private:
  std::map<std::string, ParamT<T>> params_;
};

using ParamSet = ParamSetT<float>;
using ParamSetD = ParamSetT<double>;

// ---------------------------------------------------------------------------
// initialization
// ---------------------------------------------------------------------------

/// Fan-based uniform init (Glorot): U(-l, l) with l = sqrt(6 / (fan_in + fan_out)).
template <class T>
void init_glorot_uniform(TensorT<T>& t, Rng& rng) {
  int fan_in = t.dim(0);
  int fan_out = t.rank() >= 2 ? t.dim(t.rank() - 1) : t.dim(0);
  double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (T& v : t.raw()) v = static_cast<T>(rng.uniform(-limit, limit));
}

template <class T>
void init_uniform(TensorT<T>& t, Rng& rng, double scale) {
  for (T& v : t.raw()) v = static_cast<T>(rng.uniform(-scale, scale));
}

// ---------------------------------------------------------------------------
// embedding
// ---------------------------------------------------------------------------

/// Row gather: out[b, t, :] = table[idx(b, t), :].
template <class T>
TensorT<T> embedding_forward(const IndexMatrix& idx, const TensorT<T>& table) {
  const int vocab = table.dim(0);
  const int ed = table.dim(1);
  TensorT<T> out({idx.rows, idx.cols, ed});
  for (int i = 0; i < idx.rows; ++i) {
    for (int j = 0; j < idx.cols; ++j) {
      const int w = idx.at(i, j);
      if (w < 0 || w >= vocab)
        throw std::out_of_range("embedding index " + std::to_string(w) + " out of range [0," +
                                std::to_string(vocab) + ")");
      const T* src = table.data() + static_cast<std::size_t>(w) * ed;
      T* dst = out.data() + (static_cast<std::size_t>(i) * idx.cols + j) * ed;
      for (int e = 0; e < ed; ++e) dst[e] = src[e];
    }
  }
  return out;
}

/// Scatter-add of d_out into the table gradient. Serial: rows repeat.
template <class T>
void embedding_backward(const IndexMatrix& idx, const TensorT<T>& d_out, TensorT<T>& table_grad) {
  const int ed = table_grad.dim(1);
  for (int i = 0; i < idx.rows; ++i) {
    for (int j = 0; j < idx.cols; ++j) {
      const int w = idx.at(i, j);
      const T* src = d_out.data() + (static_cast<std::size_t>(i) * idx.cols + j) * ed;
      T* dst = table_grad.data() + static_cast<std::size_t>(w) * ed;
      for (int e = 0; e < ed; ++e) dst[e] += src[e];
    }
  }
}

// ---------------------------------------------------------------------------
// dense / activations
// ---------------------------------------------------------------------------

/// y = x * w + b with x: [m, k], w: [k, n], b: [n].
template <class T>
TensorT<T> dense_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
  TensorT<T> y({x.dim(0), w.dim(1)});
  kernels::matmul_nn(x, w, y);
  const int m = y.dim(0), n = y.dim(1);
  T* py = y.data();
  const T* pb = b.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) py[static_cast<std::size_t>(i) * n + j] += pb[j];
  return y;
}

template <class T>
void dense_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& d_y,
                    TensorT<T>& d_w, TensorT<T>& d_b, TensorT<T>* d_x) {
  kernels::matmul_tn(x, d_y, d_w, /*accumulate=*/true);
  const int m = d_y.dim(0), n = d_y.dim(1);
  const T* pd = d_y.data();
  T* pb = d_b.data();
  for (int j = 0; j < n; ++j) {
    T acc = T(0);
    for (int i = 0; i < m; ++i) acc += pd[static_cast<std::size_t>(i) * n + j];
    pb[j] += acc;
  }
  if (d_x) kernels::matmul_nt(d_y, w, *d_x, /*accumulate=*/true);
}

template <class T>
TensorT<T> relu_forward(const TensorT<T>& x) {
  TensorT<T> y(x.shape());
  const T* px = x.data();
  T* py = y.data();
  for (std::size_t i = 0; i < x.numel(); ++i) py[i] = px[i] > T(0) ? px[i] : T(0);
  return y;
}

template <class T>
TensorT<T> relu_backward(const TensorT<T>& x, const TensorT<T>& d_y) {
  TensorT<T> d_x(x.shape());
  const T* px = x.data();
  const T* pd = d_y.data();
  T* po = d_x.data();
  for (std::size_t i = 0; i < x.numel(); ++i) po[i] = px[i] > T(0) ? pd[i] : T(0);
  return d_x;
}

// ---------------------------------------------------------------------------
// softmax / batched dot / concat
// ---------------------------------------------------------------------------

template <class T>
TensorT<T> softmax_rows(const TensorT<T>& x) {
  TensorT<T> y(x.shape());
  kernels::softmax_rows(x, y);
  return y;
}

/// d_x = (d_y - sum(d_y * y, lastaxis)) * y, rowwise.
template <class T>
TensorT<T> softmax_rows_backward(const TensorT<T>& y, const TensorT<T>& d_y) {
  TensorT<T> d_x(y.shape());
  const int cols = y.dim(y.rank() - 1);
  const std::size_t rows = y.numel() / static_cast<std::size_t>(cols);
  const T* py = y.data();
  const T* pd = d_y.data();
  T* po = d_x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* yi = py + r * cols;
    const T* di = pd + r * cols;
    T* oi = po + r * cols;
    T dot = T(0);
    for (int c = 0; c < cols; ++c) dot += di[c] * yi[c];
    for (int c = 0; c < cols; ++c) oi[c] = (di[c] - dot) * yi[c];
  }
  return d_x;
}

template <class T>
TensorT<T> batched_dot(const TensorT<T>& a, const TensorT<T>& b, int axis_a, int axis_b) {
  const int keep_a = a.dim(axis_a == 1 ? 2 : 1);
  const int keep_b = b.dim(axis_b == 1 ? 2 : 1);
  TensorT<T> out({a.dim(0), keep_a, keep_b});
  kernels::batched_dot(a, b, axis_a, axis_b, out);
  return out;
}

/// Gradients of batched_dot for the two axis layouts the models use.
template <class T>
void batched_dot_backward(const TensorT<T>& a, const TensorT<T>& b, int axis_a, int axis_b,
                          const TensorT<T>& d_out, TensorT<T>& d_a, TensorT<T>& d_b) {
  if (axis_a == 2 && axis_b == 2) {
    // out[b,i,j] = sum_k a[b,i,k] b[b,j,k]
    kernels::batched_dot(d_out, b, 2, 1, d_a, /*accumulate=*/true);
    kernels::batched_dot(d_out, a, 1, 1, d_b, /*accumulate=*/true);
  } else if (axis_a == 2 && axis_b == 1) {
    // out[b,i,k] = sum_j a[b,i,j] b[b,j,k]
    kernels::batched_dot(d_out, b, 2, 2, d_a, /*accumulate=*/true);
    kernels::batched_dot(a, d_out, 1, 1, d_b, /*accumulate=*/true);
  } else {
    throw ShapeError("batched_dot_backward: unsupported axes");
  }
}

/// Join rank-3 tensors along the last axis.
template <class T>
TensorT<T> concat_lastaxis(const std::vector<const TensorT<T>*>& parts) {
  if (parts.empty()) throw ShapeError("concat_lastaxis: no inputs");
  const int b = parts[0]->dim(0), t = parts[0]->dim(1);
  int total = 0;
  for (const auto* p : parts) {
    if (p->rank() != 3 || p->dim(0) != b || p->dim(1) != t)
      throw ShapeError("concat_lastaxis shape mismatch");
    total += p->dim(2);
  }
  TensorT<T> out({b, t, total});
  const std::size_t rows = static_cast<std::size_t>(b) * t;
  for (std::size_t r = 0; r < rows; ++r) {
    T* dst = out.data() + r * total;
    for (const auto* p : parts) {
      const int k = p->dim(2);
      const T* src = p->data() + r * k;
      for (int c = 0; c < k; ++c) dst[c] = src[c];
      dst += k;
    }
  }
  return out;
}

/// Split the gradient of a last-axis concat back into per-part gradients.
template <class T>
void split_lastaxis(const TensorT<T>& d_out, const std::vector<TensorT<T>*>& d_parts) {
  int total = 0;
  for (const auto* p : d_parts) total += p->dim(2);
  if (total != d_out.dim(2)) throw ShapeError("split_lastaxis size mismatch");
  const std::size_t rows = static_cast<std::size_t>(d_out.dim(0)) * d_out.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = d_out.data() + r * total;
    for (auto* p : d_parts) {
      const int k = p->dim(2);
      T* dst = p->data() + r * k;
      for (int c = 0; c < k; ++c) dst[c] += src[c];
      src += k;
    }
  }
}

// ---------------------------------------------------------------------------
// cross-entropy
// ---------------------------------------------------------------------------

template <class T>
struct XentResult {
  double loss = 0;
  TensorT<T> d_logits;  // (probs - onehot) / batch, i.e. gradient through the softmax
};

/// Mean negative log-likelihood of the target indices. `probs` rows must be
/// softmax outputs; the returned gradient is with respect to the logits.
template <class T>
XentResult<T> cross_entropy(const TensorT<T>& probs, const std::vector<int>& targets) {
  const int b = probs.dim(0), vocab = probs.dim(1);
  if (static_cast<int>(targets.size()) != b)
    throw ShapeError("cross_entropy: target count != batch");
  XentResult<T> res;
  res.d_logits = TensorT<T>({b, vocab});
  const T* pp = probs.data();
  T* pd = res.d_logits.data();
  const double tiny = 1e-12;
  double loss = 0;
  for (int i = 0; i < b; ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= vocab) throw std::out_of_range("cross_entropy: target index out of range");
    const T* row = pp + static_cast<std::size_t>(i) * vocab;
    loss -= std::log(std::max(static_cast<double>(row[t]), tiny));
    T* drow = pd + static_cast<std::size_t>(i) * vocab;
    for (int j = 0; j < vocab; ++j) drow[j] = row[j] / static_cast<T>(b);
    drow[t] -= T(1) / static_cast<T>(b);
  }
  res.loss = loss / b;
  return res;
}

// ---------------------------------------------------------------------------
// GRU
// ---------------------------------------------------------------------------

// Parameter names under a prefix: <p>.wz .wr .wh (input kernels [e,u]),
// <p>.uz .ur .uh (recurrent kernels [u,u]), <p>.bz .br .bh (biases [u]).
inline std::vector<std::string> gru_param_names(const std::string& prefix) {
  return {prefix + ".wz", prefix + ".wr", prefix + ".wh", prefix + ".uz", prefix + ".ur",
          prefix + ".uh", prefix + ".bz", prefix + ".br", prefix + ".bh"};
}

template <class T>
void add_gru_params(ParamSetT<T>& ps, const std::string& prefix, int in_dim, int units) {
  ps.add(prefix + ".wz", {in_dim, units});
  ps.add(prefix + ".wr", {in_dim, units});
  ps.add(prefix + ".wh", {in_dim, units});
  ps.add(prefix + ".uz", {units, units});
  ps.add(prefix + ".ur", {units, units});
  ps.add(prefix + ".uh", {units, units});
  ps.add(prefix + ".bz", {units});
  ps.add(prefix + ".br", {units});
  ps.add(prefix + ".bh", {units});
}

template <class T>
struct GruCache {
  TensorT<T> x;       // [b, T, e] input as given
  TensorT<T> h0;      // [b, u]
  TensorT<T> states;  // [b, T, u] h_t for every step
  TensorT<T> z, r, hc;  // gate activations per step, each [b, T, u]
};

namespace detail {

template <class T>
void copy_step(const TensorT<T>& seq, int t, TensorT<T>& out) {  // [b,T,u] -> [b,u]
  const int b = seq.dim(0), tt = seq.dim(1), u = seq.dim(2);
  for (int i = 0; i < b; ++i) {
    const T* src = seq.data() + (static_cast<std::size_t>(i) * tt + t) * u;
    T* dst = out.data() + static_cast<std::size_t>(i) * u;
    for (int c = 0; c < u; ++c) dst[c] = src[c];
  }
}

template <class T>
void store_step(TensorT<T>& seq, int t, const TensorT<T>& in) {  // [b,u] -> [b,T,u]
  const int b = seq.dim(0), tt = seq.dim(1), u = seq.dim(2);
  for (int i = 0; i < b; ++i) {
    const T* src = in.data() + static_cast<std::size_t>(i) * u;
    T* dst = seq.data() + (static_cast<std::size_t>(i) * tt + t) * u;
    for (int c = 0; c < u; ++c) dst[c] = src[c];
  }
}

template <class T>
void add_step(TensorT<T>& acc, const TensorT<T>& seq, int t) {  // acc += seq[:,t,:]
  const int b = seq.dim(0), tt = seq.dim(1), u = seq.dim(2);
  for (int i = 0; i < b; ++i) {
    const T* src = seq.data() + (static_cast<std::size_t>(i) * tt + t) * u;
    T* dst = acc.data() + static_cast<std::size_t>(i) * u;
    for (int c = 0; c < u; ++c) dst[c] += src[c];
  }
}

template <class T>
TensorT<T> as_matrix(const TensorT<T>& t3) {  // [b,T,e] copy viewed as [b*T, e]
  TensorT<T> m = t3;
  m.reshape({t3.dim(0) * t3.dim(1), t3.dim(2)});
  return m;
}

template <class T>
inline T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

}  // namespace detail

/// Standard GRU (reset gate applied before the recurrent matmul):
///   z = sig(x Wz + h Uz + bz), r = sig(x Wr + h Ur + br),
///   hc = tanh(x Wh + (r*h) Uh + bh), h' = (1-z)*h + z*hc.
/// Returns the state at every step plus the cached gate activations.
template <class T>
GruCache<T> gru_forward(const TensorT<T>& x, const TensorT<T>& h0, const ParamSetT<T>& ps,
                        const std::string& prefix) {
  const int b = x.dim(0), steps = x.dim(1);
  const int units = ps.value(prefix + ".uz").dim(0);
  if (h0.dim(0) != b || h0.dim(1) != units) throw ShapeError("gru_forward: h0 shape mismatch");
  if (ps.value(prefix + ".wz").dim(0) != x.dim(2))
    throw ShapeError("gru_forward: input dim mismatch");

  GruCache<T> cache;
  cache.x = x;
  cache.h0 = h0;
  cache.states = TensorT<T>({b, steps, units});
  cache.z = TensorT<T>({b, steps, units});
  cache.r = TensorT<T>({b, steps, units});
  cache.hc = TensorT<T>({b, steps, units});

  // input projections for all steps at once
  TensorT<T> x2 = detail::as_matrix(x);
  TensorT<T> az = dense_forward(x2, ps.value(prefix + ".wz"), ps.value(prefix + ".bz"));
  TensorT<T> ar = dense_forward(x2, ps.value(prefix + ".wr"), ps.value(prefix + ".br"));
  TensorT<T> ah = dense_forward(x2, ps.value(prefix + ".wh"), ps.value(prefix + ".bh"));
  az.reshape({b, steps, units});
  ar.reshape({b, steps, units});
  ah.reshape({b, steps, units});

  TensorT<T> h = h0;
  TensorT<T> gz({b, units}), gr({b, units}), gh({b, units}), rh({b, units});
  for (int t = 0; t < steps; ++t) {
    detail::copy_step(az, t, gz);
    detail::copy_step(ar, t, gr);
    detail::copy_step(ah, t, gh);
    kernels::matmul_nn(h, ps.value(prefix + ".uz"), gz, /*accumulate=*/true);
    kernels::matmul_nn(h, ps.value(prefix + ".ur"), gr, /*accumulate=*/true);
    for (std::size_t i = 0; i < gz.numel(); ++i) {
      gz.raw()[i] = detail::sigmoid(gz.raw()[i]);
      gr.raw()[i] = detail::sigmoid(gr.raw()[i]);
      rh.raw()[i] = gr.raw()[i] * h.raw()[i];
    }
    kernels::matmul_nn(rh, ps.value(prefix + ".uh"), gh, /*accumulate=*/true);
    for (std::size_t i = 0; i < gh.numel(); ++i) {
      gh.raw()[i] = std::tanh(gh.raw()[i]);
      h.raw()[i] = (T(1) - gz.raw()[i]) * h.raw()[i] + gz.raw()[i] * gh.raw()[i];
    }
    detail::store_step(cache.z, t, gz);
    detail::store_step(cache.r, t, gr);
    detail::store_step(cache.hc, t, gh);
    detail::store_step(cache.states, t, h);
  }
  return cache;
}

/// Final state h_T as a [b, u] matrix.
template <class T>
TensorT<T> gru_last_state(const GruCache<T>& cache) {
  const int steps = cache.states.dim(1);
  TensorT<T> h({cache.states.dim(0), cache.states.dim(2)});
  detail::copy_step(cache.states, steps - 1, h);
  return h;
}

/// Backprop through time. d_states may be empty (no per-step gradient);
/// d_last may be null. Parameter gradients accumulate into ps; d_x / d_h0
/// accumulate when non-null.
template <class T>
void gru_backward(const GruCache<T>& cache, const TensorT<T>& d_states, const TensorT<T>* d_last,
                  ParamSetT<T>& ps, const std::string& prefix, TensorT<T>* d_x, TensorT<T>* d_h0) {
  const int b = cache.states.dim(0), steps = cache.states.dim(1), units = cache.states.dim(2);
  const bool has_seq_grad = !d_states.empty();
  if (has_seq_grad && !d_states.same_shape(cache.states))
    throw ShapeError("gru_backward: d_states shape mismatch");

  const TensorT<T>& uz = ps.value(prefix + ".uz");
  const TensorT<T>& ur = ps.value(prefix + ".ur");
  const TensorT<T>& uh = ps.value(prefix + ".uh");

  TensorT<T> dh({b, units});
  if (d_last) dh = *d_last;

  TensorT<T> daz({b, steps, units}), dar({b, steps, units}), dah({b, steps, units});
  TensorT<T> h_prev({b, units}), z({b, units}), r({b, units}), hc({b, units});
  TensorT<T> dz({b, units}), dhc({b, units}), drh({b, units}), dr({b, units});
  TensorT<T> rh({b, units}), ga({b, units}), dh_next({b, units});

  for (int t = steps - 1; t >= 0; --t) {
    if (has_seq_grad) detail::add_step(dh, d_states, t);
    if (t == 0)
      h_prev = cache.h0;
    else
      detail::copy_step(cache.states, t - 1, h_prev);
    detail::copy_step(cache.z, t, z);
    detail::copy_step(cache.r, t, r);
    detail::copy_step(cache.hc, t, hc);

    // h' = (1-z)*h + z*hc
    for (std::size_t i = 0; i < dh.numel(); ++i) {
      dz.raw()[i] = dh.raw()[i] * (hc.raw()[i] - h_prev.raw()[i]);
      dhc.raw()[i] = dh.raw()[i] * z.raw()[i];
      dh_next.raw()[i] = dh.raw()[i] * (T(1) - z.raw()[i]);
    }

    // candidate: hc = tanh(ah + (r*h) Uh)
    for (std::size_t i = 0; i < ga.numel(); ++i) {
      ga.raw()[i] = dhc.raw()[i] * (T(1) - hc.raw()[i] * hc.raw()[i]);
      rh.raw()[i] = r.raw()[i] * h_prev.raw()[i];
    }
    detail::store_step(dah, t, ga);
    kernels::matmul_tn(rh, ga, ps.grad(prefix + ".uh"), /*accumulate=*/true);
    drh.fill(T(0));
    kernels::matmul_nt(ga, uh, drh, /*accumulate=*/true);
    for (std::size_t i = 0; i < drh.numel(); ++i) {
      dr.raw()[i] = drh.raw()[i] * h_prev.raw()[i];
      dh_next.raw()[i] += drh.raw()[i] * r.raw()[i];
    }

    // update gate: z = sig(az + h Uz)
    for (std::size_t i = 0; i < ga.numel(); ++i)
      ga.raw()[i] = dz.raw()[i] * z.raw()[i] * (T(1) - z.raw()[i]);
    detail::store_step(daz, t, ga);
    kernels::matmul_tn(h_prev, ga, ps.grad(prefix + ".uz"), /*accumulate=*/true);
    kernels::matmul_nt(ga, uz, dh_next, /*accumulate=*/true);

    // reset gate: r = sig(ar + h Ur)
    for (std::size_t i = 0; i < ga.numel(); ++i)
      ga.raw()[i] = dr.raw()[i] * r.raw()[i] * (T(1) - r.raw()[i]);
    detail::store_step(dar, t, ga);
    kernels::matmul_tn(h_prev, ga, ps.grad(prefix + ".ur"), /*accumulate=*/true);
    kernels::matmul_nt(ga, ur, dh_next, /*accumulate=*/true);

    dh = dh_next;
  }

  if (d_h0)
    for (std::size_t i = 0; i < dh.numel(); ++i) d_h0->raw()[i] += dh.raw()[i];

  // fold per-step gate gradients into the input kernels and biases
  TensorT<T> x2 = detail::as_matrix(cache.x);
  TensorT<T> daz2 = detail::as_matrix(daz);
  TensorT<T> dar2 = detail::as_matrix(dar);
  TensorT<T> dah2 = detail::as_matrix(dah);
  TensorT<T> d_x2;
  const bool want_dx = d_x != nullptr;
  if (want_dx) d_x2 = TensorT<T>({b * steps, cache.x.dim(2)});

  struct Gate {
    const TensorT<T>* da;
    const char* w;
    const char* bias;
  };
  const Gate gates[3] = {{&daz2, ".wz", ".bz"}, {&dar2, ".wr", ".br"}, {&dah2, ".wh", ".bh"}};
  for (const Gate& g : gates) {
    kernels::matmul_tn(x2, *g.da, ps.grad(prefix + g.w), /*accumulate=*/true);
    TensorT<T>& db = ps.grad(prefix + g.bias);
    const int rows = g.da->dim(0), cols = g.da->dim(1);
    for (int j = 0; j < cols; ++j) {
      T acc = T(0);
      for (int i = 0; i < rows; ++i) acc += g.da->at(i, j);
      db.raw()[static_cast<std::size_t>(j)] += acc;
    }
    if (want_dx) kernels::matmul_nt(*g.da, ps.value(prefix + g.w), d_x2, /*accumulate=*/true);
  }
  if (want_dx) {
    d_x2.reshape({b, steps, cache.x.dim(2)});
    for (std::size_t i = 0; i < d_x2.numel(); ++i) d_x->raw()[i] += d_x2.raw()[i];
  }
}

// ---------------------------------------------------------------------------
// optimizer
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive per-parameter step with bias-corrected first/second moments.
/// Iteration order over parameters is the sorted name order, so updates are
/// deterministic for a given seed and batch sequence.
template <class T>
class AdamT {
public:
  explicit AdamT(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }

  void step(ParamSetT<T>& ps) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (const std::string& name : ps.names()) {
      ParamT<T>& p = ps.at(name);
      auto& m = moment1_[name];
      auto& v = moment2_[name];
      if (m.empty()) {
        m = TensorT<T>(p.value.shape());
        v = TensorT<T>(p.value.shape());
      }
      for (std::size_t i = 0; i < p.value.numel(); ++i) {
        const double g = p.grad.raw()[i];
        const double mi = cfg_.beta1 * m.raw()[i] + (1.0 - cfg_.beta1) * g;
        const double vi = cfg_.beta2 * v.raw()[i] + (1.0 - cfg_.beta2) * g * g;
        m.raw()[i] = static_cast<T>(mi);
        v.raw()[i] = static_cast<T>(vi);
        p.value.raw()[i] -=
            static_cast<T>(cfg_.lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.eps));
      }
    }
  }

private:
  AdamConfig cfg_;
  long t_ = 0;
  std::map<std::string, TensorT<T>> moment1_, moment2_;
};

using Adam = AdamT<float>;

// ---------------------------------------------------------------------------
// gradient checking
// ---------------------------------------------------------------------------

/// Central finite differences against the analytic gradients already stored
/// in `ps` (fill them via a backward pass before calling). `loss_fn` must
/// recompute the scalar loss from the current parameter values. Returns the
/// max relative error over every entry of every parameter.
inline double grad_check(ParamSetD& ps, const std::function<double()>& loss_fn,
                         double eps = 1e-5) {
  double worst = 0;
  for (const std::string& name : ps.names()) {
    ParamT<double>& p = ps.at(name);
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      const double keep = p.value.raw()[i];
      p.value.raw()[i] = keep + eps;
      const double up = loss_fn();
      p.value.raw()[i] = keep - eps;
      const double down = loss_fn();
      p.value.raw()[i] = keep;
      const double fd = (up - down) / (2 * eps);
      const double g = p.grad.raw()[i];
      const double rel = std::abs(fd - g) / std::max(1e-8, std::abs(fd) + std::abs(g));
      if (rel > worst) worst = rel;
    }
  }
  return worst;
}

}  // namespace csum::nn
