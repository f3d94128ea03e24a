#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "tunnelpilot/rng.hpp"
#include "tunnelpilot/tensor.hpp"

namespace tp_test {

// Central difference of a scalar functional with respect to one slot of a
// tensor the functional reads.
inline double central_diff(const std::function<double()>& f, double* slot,
                           double h) {
  double orig = *slot;
  *slot = orig + h;
  double fp = f();
  *slot = orig - h;
  double fm = f();
  *slot = orig;
  return (fp - fm) / (2.0 * h);
}

inline double rel_err(double a, double b) {
  double denom = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / denom;
}

// Uniform values in [-1, 1] pushed away from zero so ReLU kinks and pooling
// ties stay clear of the +-h probe interval.
inline void fill_tie_free(tp::TensorD& t, tp::Rng& rng, double margin = 0.05) {
  for (auto& v : t.data) {
    double x = rng.uniform(-1.0, 1.0);
    v = x + (x >= 0 ? margin : -margin);
  }
}

// max over all inputs of rel_err(analytic d<c,f(x)>/dx_i, central difference)
inline double max_grad_rel_err(tp::TensorD& x,
                               const std::function<double()>& loss,
                               const tp::TensorD& analytic, double h) {
  double worst = 0.0;
  for (size_t i = 0; i < x.numel(); ++i) {
    double num = central_diff(loss, &x.data[i], h);
    worst = std::max(worst, rel_err(analytic.data[i], num));
  }
  return worst;
}

}  // namespace tp_test
