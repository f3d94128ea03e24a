#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tunnelpilot/rng.hpp"

using namespace tp;

TEST_CASE("mix_seed separates nearby seeds") {
  CHECK(mix_seed(1) != mix_seed(2));
  CHECK(mix_seed(0) != 0);
  // fixed point of the finalizer would collapse derived streams
  CHECK(mix_seed(42) != 42);
  // frozen reference values (splitmix64 finalizer)
  CHECK(mix_seed(0) == 0xe220a8397b1dcdafULL);
  CHECK(mix_seed(1) == 0x910a2dec89025cc1ULL);
}

TEST_CASE("uniform() stays in [0, 1) and is deterministic") {
  Rng a(123), b(123);
  for (int i = 0; i < 10000; ++i) {
    double u = a.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == b.uniform());
  }
}

TEST_CASE("uniform(lo, hi) respects bounds") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    double u = rng.uniform(-2.5, 4.0);
    CHECK(u >= -2.5);
    CHECK(u < 4.0);
  }
}

TEST_CASE("uniform mean converges to 1/2") {
  Rng rng(99);
  double sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += rng.uniform();
  CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("below(n) covers all residues without bias artifacts") {
  Rng rng(5);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    uint64_t v = rng.below(7);
    REQUIRE(v < 7);
    counts[v]++;
  }
  for (int c : counts) CHECK(std::abs(c - n / 7) < 500);
}

TEST_CASE("below(1) is always zero") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) CHECK(rng.below(1) == 0);
}

TEST_CASE("normal() moments") {
  Rng rng(2024);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    double v = rng.normal();
    sum += v;
    sq += v * v;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("normal(mean, sigma) scales and shifts") {
  Rng a(31), b(31);
  for (int i = 0; i < 100; ++i)
    CHECK(a.normal(10.0, 2.0) == doctest::Approx(10.0 + 2.0 * b.normal()).epsilon(1e-12));
}

TEST_CASE("shuffle is a permutation and deterministic per seed") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  Rng rng(77);
  rng.shuffle(v);
  std::vector<int> w = v;
  std::sort(w.begin(), w.end());
  for (int i = 0; i < 50; ++i) CHECK(w[i] == i);

  std::vector<int> v2(50);
  std::iota(v2.begin(), v2.end(), 0);
  Rng rng2(77);
  rng2.shuffle(v2);
  CHECK(v == v2);

  std::vector<int> v3(50);
  std::iota(v3.begin(), v3.end(), 0);
  Rng rng3(78);
  rng3.shuffle(v3);
  CHECK(v != v3);
}

TEST_CASE("independent streams derived via mix_seed differ") {
  Rng a(mix_seed(100)), b(mix_seed(101));
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) same++;
  CHECK(same == 0);
}
