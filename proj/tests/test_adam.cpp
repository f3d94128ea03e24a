#include <doctest.h>

#include <cmath>
#include <vector>

#include "tunnelpilot/adam.hpp"
#include "tunnelpilot/rng.hpp"

using namespace tp;

namespace {

// textbook update with explicit beta^t powers, kept in long double
struct RefAdam {
  std::vector<long double> m, v;
  long double alpha = 1e-3L, beta1 = 0.9L, beta2 = 0.999L, eps = 1e-8L;
  int t = 0;

  explicit RefAdam(size_t n) : m(n, 0.0L), v(n, 0.0L) {}

  void step(std::vector<long double>& theta, const std::vector<long double>& g) {
    ++t;
    for (size_t i = 0; i < theta.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0L - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0L - beta2) * g[i] * g[i];
      long double mhat = m[i] / (1.0L - powl(beta1, t));
      long double vhat = v[i] / (1.0L - powl(beta2, t));
      theta[i] -= alpha * mhat / (sqrtl(vhat) + eps);
    }
  }
};

}  // namespace

TEST_CASE("first step moves by -alpha * sign(g) up to epsilon") {
  TensorT<double> p({3});
  p.data = {0.0, 0.0, 0.0};
  TensorT<double> g({3});
  g.data = {1.0, -3.0, 0.25};
  AdamStateT<double> st(p.shape);
  adam_step(p, g, st);
  // mhat = g, vhat = g*g, so the update is -alpha * g / (|g| + eps)
  CHECK(p.data[0] == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-14));
  CHECK(p.data[1] == doctest::Approx(0.001 * 3.0 / (3.0 + 1e-8)).epsilon(1e-14));
  CHECK(p.data[2] == doctest::Approx(-0.001 * 0.25 / (0.25 + 1e-8)).epsilon(1e-14));
  CHECK(st.t == 1);
}

TEST_CASE("long trajectory matches an explicit-power reference") {
  const size_t n = 5;
  TensorT<double> p({static_cast<int>(n)});
  p.data = {0.4, -0.7, 1.3, 0.05, -2.0};
  AdamStateT<double> st(p.shape);

  std::vector<long double> theta(p.data.begin(), p.data.end());
  RefAdam ref(n);

  Rng rng(77);
  for (int step = 0; step < 200; ++step) {
    TensorT<double> g({static_cast<int>(n)});
    for (auto& v : g.data) v = rng.uniform(-2.0, 2.0);
    std::vector<long double> gl(g.data.begin(), g.data.end());
    adam_step(p, g, st);
    ref.step(theta, gl);
    for (size_t i = 0; i < n; ++i)
      CHECK(p.data[i] == doctest::Approx(static_cast<double>(theta[i])).epsilon(1e-10));
  }
  CHECK(st.beta1_pow == doctest::Approx(std::pow(0.9, 200)).epsilon(1e-10));
  CHECK(st.beta2_pow == doctest::Approx(std::pow(0.999, 200)).epsilon(1e-10));
}

TEST_CASE("minimizes a quadratic bowl") {
  TensorT<double> p({2});
  p.data = {8.0, -6.0};
  AdamStateT<double> st(p.shape);
  st.alpha = 0.05;
  for (int i = 0; i < 3000; ++i) {
    TensorT<double> g({2});
    g.data = {2.0 * (p.data[0] - 5.0), 2.0 * (p.data[1] + 1.0)};
    adam_step(p, g, st);
  }
  CHECK(p.data[0] == doctest::Approx(5.0).epsilon(1e-3));
  CHECK(p.data[1] == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("float state drives float parameters the same direction") {
  Tensor p({4});
  p.data = {1.0f, 1.0f, 1.0f, 1.0f};
  Tensor g({4});
  g.data = {0.5f, -0.5f, 2.0f, -2.0f};
  AdamState st(p.shape);
  adam_step(p, g, st);
  CHECK(p.data[0] < 1.0f);
  CHECK(p.data[1] > 1.0f);
  CHECK(p.data[2] < 1.0f);
  CHECK(p.data[3] > 1.0f);
}

TEST_CASE("shape mismatches are rejected") {
  TensorT<double> p({3}), g_bad({4}), g_ok({3});
  AdamStateT<double> st_ok(p.shape), st_bad(std::vector<int>{2});
  CHECK_THROWS_AS(adam_step(p, g_bad, st_ok), std::invalid_argument);
  CHECK_THROWS_AS(adam_step(p, g_ok, st_bad), std::invalid_argument);
}

TEST_CASE("zero gradient leaves parameters fixed once state is zero") {
  TensorT<double> p({2});
  p.data = {3.0, -4.0};
  AdamStateT<double> st(p.shape);
  TensorT<double> g({2});  // all zeros
  adam_step(p, g, st);
  CHECK(p.data[0] == 3.0);
  CHECK(p.data[1] == -4.0);
}
