#pragma once

// Dense kernels backing the nn ops. The production entry points parallelize
// over independent output elements with OpenMP; csum::kernels::serial holds
// plain-loop reference versions used by the tests and the benchmark. Every
// output element is accumulated by exactly one thread in a fixed inner-loop
// order, so parallel and serial results are bitwise identical.

#include <algorithm>
#include <cstddef>
#include <string>

#include "csum/tensor.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace csum::kernels {

namespace detail {

/// Rows [i0,i1) of out[m,n] = a[m,k] * b[k,n]. The t-loop sits between i and
/// j so b is read contiguously; each out element still accumulates its k
/// products in ascending-t order, exactly as a naive i,j,t loop would, which
/// keeps every caller (serial, parallel, any row split) bitwise identical.
template <class T>
void matmul_nn_rows(const T* pa, const T* pb, T* po, int k, int n, int i0, int i1,
                    bool accumulate) {
  for (int i = i0; i < i1; ++i) {
    const T* arow = pa + static_cast<std::size_t>(i) * k;
    T* orow = po + static_cast<std::size_t>(i) * n;
    if (!accumulate) std::fill(orow, orow + n, T(0));
    for (int t = 0; t < k; ++t) {
      const T av = arow[t];
      const T* brow = pb + static_cast<std::size_t>(t) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

/// Rows [i0,i1) of out[k,n] = a[m,k]^T * b[m,n]; t outer keeps both inputs
/// contiguous, accumulation per element is ascending-t as above.
template <class T>
void matmul_tn_rows(const T* pa, const T* pb, T* po, int m, int k, int n, int i0, int i1,
                    bool accumulate) {
  if (!accumulate)
    std::fill(po + static_cast<std::size_t>(i0) * n, po + static_cast<std::size_t>(i1) * n, T(0));
  for (int t = 0; t < m; ++t) {
    const T* arow = pa + static_cast<std::size_t>(t) * k;
    const T* brow = pb + static_cast<std::size_t>(t) * n;
    for (int i = i0; i < i1; ++i) {
      const T av = arow[i];
      T* orow = po + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace detail

namespace serial {

/// out[m,n] = a[m,k] * b[k,n]  (+= when accumulate)
template <class T>
void matmul_nn(const TensorT<T>& a, const TensorT<T>& b, TensorT<T>& out, bool accumulate = false) {
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k || out.dim(0) != m || out.dim(1) != n)
    throw ShapeError("matmul_nn shape mismatch " + a.shape_str() + " x " + b.shape_str());
  detail::matmul_nn_rows(a.data(), b.data(), out.data(), k, n, 0, m, accumulate);
}

/// out[m,k] = a[m,n] * b[k,n]^T
template <class T>
void matmul_nt(const TensorT<T>& a, const TensorT<T>& b, TensorT<T>& out, bool accumulate = false) {
  const int m = a.dim(0), n = a.dim(1), k = b.dim(0);
  if (b.dim(1) != n || out.dim(0) != m || out.dim(1) != k)
    throw ShapeError("matmul_nt shape mismatch " + a.shape_str() + " x " + b.shape_str());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < k; ++j) {
      T acc = accumulate ? po[static_cast<std::size_t>(i) * k + j] : T(0);
      for (int t = 0; t < n; ++t)
        acc += pa[static_cast<std::size_t>(i) * n + t] * pb[static_cast<std::size_t>(j) * n + t];
      po[static_cast<std::size_t>(i) * k + j] = acc;
    }
  }
}

/// out[k,n] = a[m,k]^T * b[m,n]
template <class T>
void matmul_tn(const TensorT<T>& a, const TensorT<T>& b, TensorT<T>& out, bool accumulate = false) {
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != m || out.dim(0) != k || out.dim(1) != n)
    throw ShapeError("matmul_tn shape mismatch " + a.shape_str() + " x " + b.shape_str());
  detail::matmul_tn_rows(a.data(), b.data(), out.data(), m, k, n, 0, k, accumulate);
}

/// Per-batch contraction of two rank-3 tensors along one axis each
/// (Keras dot semantics). axis_a/axis_b pick the contracted axis (1 or 2);
/// axis 0 is the shared batch axis. Output shape: (batch, keep_a, keep_b).
template <class T>
void batched_dot(const TensorT<T>& a, const TensorT<T>& b, int axis_a, int axis_b,
                 TensorT<T>& out, bool accumulate = false) {
  if (a.rank() != 3 || b.rank() != 3) throw ShapeError("batched_dot expects rank-3 tensors");
  if (axis_a < 1 || axis_a > 2 || axis_b < 1 || axis_b > 2)
    throw ShapeError("batched_dot axes must be 1 or 2");
  const int batch = a.dim(0);
  if (b.dim(0) != batch) throw ShapeError("batched_dot batch mismatch");
  const int contract = a.dim(axis_a);
  if (b.dim(axis_b) != contract)
    throw ShapeError("batched_dot contracted dims differ: " + a.shape_str() + " axis " +
                     std::to_string(axis_a) + " vs " + b.shape_str() + " axis " +
                     std::to_string(axis_b));
  const int keep_a = a.dim(axis_a == 1 ? 2 : 1);
  const int keep_b = b.dim(axis_b == 1 ? 2 : 1);
  if (out.dim(0) != batch || out.dim(1) != keep_a || out.dim(2) != keep_b)
    throw ShapeError("batched_dot output shape mismatch");

  // strides for walking (keep, contract) within one batch slice
  const std::size_t a_batch = static_cast<std::size_t>(a.dim(1)) * a.dim(2);
  const std::size_t b_batch = static_cast<std::size_t>(b.dim(1)) * b.dim(2);
  const std::size_t a_keep_s = (axis_a == 1) ? 1 : static_cast<std::size_t>(a.dim(2));
  const std::size_t a_con_s = (axis_a == 1) ? static_cast<std::size_t>(a.dim(2)) : 1;
  const std::size_t b_keep_s = (axis_b == 1) ? 1 : static_cast<std::size_t>(b.dim(2));
  const std::size_t b_con_s = (axis_b == 1) ? static_cast<std::size_t>(b.dim(2)) : 1;

  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int bi = 0; bi < batch; ++bi) {
    const T* ab = pa + bi * a_batch;
    const T* bb = pb + bi * b_batch;
    T* ob = po + static_cast<std::size_t>(bi) * keep_a * keep_b;
    for (int i = 0; i < keep_a; ++i) {
      for (int j = 0; j < keep_b; ++j) {
        T acc = accumulate ? ob[static_cast<std::size_t>(i) * keep_b + j] : T(0);
        for (int t = 0; t < contract; ++t)
          acc += ab[i * a_keep_s + t * a_con_s] * bb[j * b_keep_s + t * b_con_s];
        ob[static_cast<std::size_t>(i) * keep_b + j] = acc;
      }
    }
  }
}

/// Softmax over the last axis of a rank-2 or rank-3 tensor.
template <class T>
void softmax_rows(const TensorT<T>& x, TensorT<T>& out) {
  if (!x.same_shape(out)) throw ShapeError("softmax_rows shape mismatch");
  const int cols = x.dim(x.rank() - 1);
  const std::size_t rows = x.numel() / static_cast<std::size_t>(cols);
  const T* px = x.data();
  T* po = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xi = px + r * cols;
    T* oi = po + r * cols;
    T mx = xi[0];
    for (int c = 1; c < cols; ++c) mx = xi[c] > mx ? xi[c] : mx;
    T sum = T(0);
    for (int c = 0; c < cols; ++c) {
      oi[c] = std::exp(xi[c] - mx);
      sum += oi[c];
    }
    for (int c = 0; c < cols; ++c) oi[c] /= sum;
  }
}

}  // namespace serial

template <class T>
void matmul_nn(const TensorT<T>& a, const TensorT<T>& b, TensorT<T>& out, bool accumulate = false) {
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k || out.dim(0) != m || out.dim(1) != n)
    throw ShapeError("matmul_nn shape mismatch " + a.shape_str() + " x " + b.shape_str());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) detail::matmul_nn_rows(pa, pb, po, k, n, i, i + 1, accumulate);
}

template <class T>
void matmul_nt(const TensorT<T>& a, const TensorT<T>& b, TensorT<T>& out, bool accumulate = false) {
  const int m = a.dim(0), n = a.dim(1), k = b.dim(0);
  if (b.dim(1) != n || out.dim(0) != m || out.dim(1) != k)
    throw ShapeError("matmul_nt shape mismatch " + a.shape_str() + " x " + b.shape_str());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < k; ++j) {
      T acc = accumulate ? po[static_cast<std::size_t>(i) * k + j] : T(0);
      for (int t = 0; t < n; ++t)
        acc += pa[static_cast<std::size_t>(i) * n + t] * pb[static_cast<std::size_t>(j) * n + t];
      po[static_cast<std::size_t>(i) * k + j] = acc;
    }
  }
}

template <class T>
void matmul_tn(const TensorT<T>& a, const TensorT<T>& b, TensorT<T>& out, bool accumulate = false) {
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != m || out.dim(0) != k || out.dim(1) != n)
    throw ShapeError("matmul_tn shape mismatch " + a.shape_str() + " x " + b.shape_str());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  // one contiguous block of out rows per thread; the t-outer helper then
  // streams a and b while each out element stays single-writer
  int nblocks = 1;
#ifdef _OPENMP
  nblocks = std::max(1, std::min(omp_get_max_threads(), k));
#endif
#pragma omp parallel for schedule(static)
  for (int blk = 0; blk < nblocks; ++blk) {
    const int i0 = static_cast<int>(static_cast<long long>(k) * blk / nblocks);
    const int i1 = static_cast<int>(static_cast<long long>(k) * (blk + 1) / nblocks);
    detail::matmul_tn_rows(pa, pb, po, m, k, n, i0, i1, accumulate);
  }
}

template <class T>
void batched_dot(const TensorT<T>& a, const TensorT<T>& b, int axis_a, int axis_b,
                 TensorT<T>& out, bool accumulate = false) {
  if (a.rank() != 3 || b.rank() != 3) throw ShapeError("batched_dot expects rank-3 tensors");
  if (axis_a < 1 || axis_a > 2 || axis_b < 1 || axis_b > 2)
    throw ShapeError("batched_dot axes must be 1 or 2");
  const int batch = a.dim(0);
  if (b.dim(0) != batch) throw ShapeError("batched_dot batch mismatch");
  const int contract = a.dim(axis_a);
  if (b.dim(axis_b) != contract)
    throw ShapeError("batched_dot contracted dims differ: " + a.shape_str() + " axis " +
                     std::to_string(axis_a) + " vs " + b.shape_str() + " axis " +
                     std::to_string(axis_b));
  const int keep_a = a.dim(axis_a == 1 ? 2 : 1);
  const int keep_b = b.dim(axis_b == 1 ? 2 : 1);
  if (out.dim(0) != batch || out.dim(1) != keep_a || out.dim(2) != keep_b)
    throw ShapeError("batched_dot output shape mismatch");

  const std::size_t a_batch = static_cast<std::size_t>(a.dim(1)) * a.dim(2);
  const std::size_t b_batch = static_cast<std::size_t>(b.dim(1)) * b.dim(2);
  const std::size_t a_keep_s = (axis_a == 1) ? 1 : static_cast<std::size_t>(a.dim(2));
  const std::size_t a_con_s = (axis_a == 1) ? static_cast<std::size_t>(a.dim(2)) : 1;
  const std::size_t b_keep_s = (axis_b == 1) ? 1 : static_cast<std::size_t>(b.dim(2));
  const std::size_t b_con_s = (axis_b == 1) ? static_cast<std::size_t>(b.dim(2)) : 1;

  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
#pragma omp parallel for schedule(static)
  for (int bi = 0; bi < batch; ++bi) {
    const T* ab = pa + bi * a_batch;
    const T* bb = pb + bi * b_batch;
    T* ob = po + static_cast<std::size_t>(bi) * keep_a * keep_b;
    for (int i = 0; i < keep_a; ++i) {
      for (int j = 0; j < keep_b; ++j) {
        T acc = accumulate ? ob[static_cast<std::size_t>(i) * keep_b + j] : T(0);
        for (int t = 0; t < contract; ++t)
          acc += ab[i * a_keep_s + t * a_con_s] * bb[j * b_keep_s + t * b_con_s];
        ob[static_cast<std::size_t>(i) * keep_b + j] = acc;
      }
    }
  }
}

template <class T>
void softmax_rows(const TensorT<T>& x, TensorT<T>& out) {
  if (!x.same_shape(out)) throw ShapeError("softmax_rows shape mismatch");
  const int cols = x.dim(x.rank() - 1);
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(x.numel() / static_cast<std::size_t>(cols));
  const T* px = x.data();
  T* po = out.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const T* xi = px + r * cols;
    T* oi = po + r * cols;
    T mx = xi[0];
    for (int c = 1; c < cols; ++c) mx = xi[c] > mx ? xi[c] : mx;
    T sum = T(0);
    for (int c = 0; c < cols; ++c) {
      oi[c] = std::exp(xi[c] - mx);
      sum += oi[c];
    }
    for (int c = 0; c < cols; ++c) oi[c] /= sum;
  }
}

}  // namespace csum::kernels
