#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "tunnelpilot/tensor.hpp"

namespace tp {

// Per-tensor Adam state. Bias-correction powers are tracked incrementally in
// double so long runs stay exact enough and deterministic.
template <typename T>
struct AdamStateT {
  int64_t t = 0;
  TensorT<T> m, v;
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;

  AdamStateT() = default;
  explicit AdamStateT(const std::vector<int>& shape) : m(shape), v(shape) {}
};

using AdamState = AdamStateT<float>;

template <typename T>
void adam_step(TensorT<T>& params, const TensorT<T>& grads, AdamStateT<T>& st) {
  if (params.shape != grads.shape)
    throw std::invalid_argument("adam: gradient shape does not match parameters");
  if (st.m.shape != params.shape)
    throw std::invalid_argument("adam: state shape does not match parameters");

  st.t += 1;
  st.beta1_pow *= st.beta1;
  st.beta2_pow *= st.beta2;
  const T b1 = static_cast<T>(st.beta1);
  const T b2 = static_cast<T>(st.beta2);
  const T c1 = static_cast<T>(1.0 / (1.0 - st.beta1_pow));
  const T c2 = static_cast<T>(1.0 / (1.0 - st.beta2_pow));
  const T lr = static_cast<T>(st.alpha);
  const T eps = static_cast<T>(st.epsilon);

  for (size_t i = 0; i < params.numel(); ++i) {
    T g = grads.data[i];
    T m = st.m.data[i] = b1 * st.m.data[i] + (T(1) - b1) * g;
    T v = st.v.data[i] = b2 * st.v.data[i] + (T(1) - b2) * g * g;
    T mhat = m * c1;
    T vhat = v * c2;
    params.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace tp
