#include <cmath>
#include <cstdint>

#include "doctest.h"
#include "oracles.hpp"
#include "rcdemand/common.hpp"
#include "rcdemand/rng.hpp"

using namespace rcd;

TEST_SUITE_BEGIN("rng");

TEST_CASE("streams are pure functions of (seed, stream, counter)") {
  Stream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  for (std::uint64_t i : {0ULL, 1ULL, 1000ULL, (1ULL << 40)}) {
    CHECK(a.bits(i) == b.bits(i));
    CHECK(a.bits(i) != c.bits(i));
    CHECK(a.bits(i) != d.bits(i));
    CHECK(a.uniform(i) == b.uniform(i));
  }
}

TEST_CASE("uniform moments") {
  Stream st(123, 0);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = st.uniform(i);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    sum += u;
    sq += u * u;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  CHECK(std::abs(mean - 0.5) <= 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(var - 1.0 / 12.0) <= 4.0 * 0.0745 / std::sqrt(n));
}

TEST_CASE("normal and gumbel draw distributions") {
  Stream st(7, 1);
  const int n = 200000;
  double nsum = 0.0, nsq = 0.0;
  int gum_neg = 0;
  for (int i = 0; i < n; ++i) {
    double z = st.normal(i);
    nsum += z;
    nsq += z * z;
    if (st.gumbel(n + i) <= 0.0) ++gum_neg;
  }
  CHECK(std::abs(nsum / n) <= 4.0 / std::sqrt(n));
  CHECK(std::abs(nsq / n - 1.0) <= 4.0 * std::sqrt(2.0 / n));
  // P(G <= 0) = exp(-1) for the standard Gumbel.
  double p = static_cast<double>(gum_neg) / n;
  CHECK(std::abs(p - std::exp(-1.0)) <= 4.0 * oracle::mc_se(std::exp(-1.0), n));
}

TEST_CASE("halton radical inverse") {
  CHECK(halton(1, 2) == 0.5);
  CHECK(halton(2, 2) == 0.25);
  CHECK(halton(3, 2) == 0.75);
  CHECK(halton(4, 2) == 0.125);
  CHECK(halton(1, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(halton(2, 3) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(halton(3, 3) == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
  CHECK_THROWS_AS((void)halton(1, 1), Error);
}

TEST_CASE("prime table") {
  CHECK(nth_prime(0) == 2);
  CHECK(nth_prime(1) == 3);
  CHECK(nth_prime(2) == 5);
  CHECK(nth_prime(5) == 13);
  CHECK_THROWS_AS((void)nth_prime(100), Error);
}

TEST_CASE("quasi-random normal points fill the cube evenly") {
  // Crude equidistribution check: mean of the first 4096 Halton-normal
  // points is much closer to zero than plain MC error would allow.
  const int n = 4096;
  double s1 = 0.0, s2 = 0.0;
  double v[3];
  for (int i = 1; i <= n; ++i) {
    halton_normal(i, 3, v);
    s1 += v[0];
    s2 += v[2];
  }
  CHECK(std::abs(s1 / n) <= 0.01);
  CHECK(std::abs(s2 / n) <= 0.01);
}

TEST_SUITE_END();
