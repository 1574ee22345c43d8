#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace csum {

class ShapeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major tensor of rank 1..3.
template <class T>
class TensorT {
public:
  TensorT() = default;

  explicit TensorT(std::vector<int> shape) : shape_(std::move(shape)) {
    if (shape_.empty() || shape_.size() > 3)
      throw ShapeError("tensor rank must be 1..3, got " + std::to_string(shape_.size()));
    std::size_t n = 1;
    for (int d : shape_) {
      if (d <= 0) throw ShapeError("tensor dims must be positive");
      n *= static_cast<std::size_t>(d);
    }
    data_.assign(n, T(0));
  }

  TensorT(std::initializer_list<int> shape) : TensorT(std::vector<int>(shape)) {}

  static TensorT zeros(std::vector<int> shape) { return TensorT(std::move(shape)); }

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& raw() { return data_; }
  const std::vector<T>& raw() const { return data_; }

  T& at(int i) { return data_[static_cast<std::size_t>(i)]; }
  T at(int i) const { return data_[static_cast<std::size_t>(i)]; }
  T& at(int i, int j) { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
  T at(int i, int j) const { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
  T& at(int i, int j, int k) {
    return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  T at(int i, int j, int k) const {
    return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }

  void fill(T v) { data_.assign(data_.size(), v); }

  /// Reinterpret the buffer under a new shape with the same element count.
  void reshape(std::vector<int> shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    if (n != data_.size()) throw ShapeError("reshape changes element count");
    if (shape.empty() || shape.size() > 3) throw ShapeError("reshape rank must be 1..3");
    shape_ = std::move(shape);
  }

  bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

  std::string shape_str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

private:
  std::vector<int> shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <class T>
bool all_finite(const TensorT<T>& t) {
  for (T v : t.raw())
    if (!std::isfinite(v)) return false;
  return true;
}

template <class T>
void check_finite(const TensorT<T>& t, const char* what) {
  if (!all_finite(t)) throw std::runtime_error(std::string("non-finite values in ") + what);
}

template <class To, class From>
TensorT<To> tensor_cast(const TensorT<From>& t) {
  TensorT<To> out(t.shape());
  for (std::size_t i = 0; i < t.numel(); ++i) out.raw()[i] = static_cast<To>(t.raw()[i]);
  return out;
}

/// Integer index matrix (batch of index sequences), row-major.
struct IndexMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::int32_t> v;

  IndexMatrix() = default;
  IndexMatrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0) {}

  std::int32_t& at(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  std::int32_t at(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
};

}  // namespace csum
