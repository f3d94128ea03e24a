#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tp {

// Dense row-major n-d array. float everywhere in the model path; the numeric
// tests instantiate double to get finite-difference headroom.
template <typename T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), T(0));
  }
  TensorT(std::vector<int> s, std::vector<T> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel_of(shape))
      throw std::invalid_argument("tensor: data length does not match shape");
  }

  static size_t numel_of(const std::vector<int>& s) {
    size_t n = 1;
    for (int e : s) {
      if (e <= 0) throw std::invalid_argument("tensor: extents must be positive");
      n *= static_cast<size_t>(e);
    }
    return n;
  }

  size_t numel() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }

  T& operator[](size_t i) { return data[i]; }
  const T& operator[](size_t i) const { return data[i]; }

  // (row, col) for rank-2, (y, x, c) for rank-3
  T& at(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
  const T& at(int i, int j) const {
    return data[static_cast<size_t>(i) * shape[1] + j];
  }
  T& at(int y, int x, int c) {
    return data[(static_cast<size_t>(y) * shape[1] + x) * shape[2] + c];
  }
  const T& at(int y, int x, int c) const {
    return data[(static_cast<size_t>(y) * shape[1] + x) * shape[2] + c];
  }

  void fill(T v) { data.assign(data.size(), v); }

  bool all_finite() const {
    for (T v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out(shape);
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

}  // namespace tp
