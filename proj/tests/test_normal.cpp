#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "rcdemand/common.hpp"
#include "rcdemand/normal.hpp"

using namespace rcd;

TEST_SUITE_BEGIN("normal");

TEST_CASE("scalar cdf against erfc reference") {
  for (double x : {-8.0, -3.0, -1.96, -0.5, 0.0, 0.3, 1.0, 2.5, 6.0}) {
    CHECK(norm_cdf(x) == doctest::Approx(oracle::norm_cdf(x)).epsilon(1e-14));
    CHECK(norm_pdf(x) == doctest::Approx(oracle::norm_pdf(x)).epsilon(1e-14));
  }
  CHECK(norm_cdf(0.0) == 0.5);
}

TEST_CASE("quantile inverts the cdf") {
  for (double p : {1e-10, 1e-4, 0.025, 0.3, 0.5, 0.8413447460685429, 0.999,
                   1.0 - 1e-10}) {
    double x = norm_quantile(p);
    CHECK(norm_cdf(x) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(norm_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS((void)norm_quantile(0.0), Error);
  CHECK_THROWS_AS((void)norm_quantile(1.0), Error);
}

TEST_CASE("bivariate cdf closed-form corner cases") {
  // P(X<=0, Y<=0) = 1/4 + asin(rho)/(2 pi)
  CHECK(bvn_cdf(0.0, 0.0, 0.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(bvn_cdf(0.0, 0.0, 0.5) ==
        doctest::Approx(0.25 + 1.0 / 12.0).epsilon(1e-9));
  CHECK(bvn_cdf(0.0, 0.0, -0.5) ==
        doctest::Approx(0.25 - 1.0 / 12.0).epsilon(1e-9));
  // Perfect correlation reduces to min / boundary cases.
  CHECK(bvn_cdf(0.7, 1.4, 1.0) == doctest::Approx(norm_cdf(0.7)).epsilon(1e-12));
  CHECK(bvn_cdf(0.7, -0.2, -1.0) ==
        doctest::Approx(norm_cdf(0.7) + norm_cdf(-0.2) - 1.0).epsilon(1e-12));
  CHECK(bvn_cdf(10.0, 10.0, 0.3) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(bvn_cdf(-40.0, 0.0, 0.3) == 0.0);
}

TEST_CASE("bivariate cdf against quadrature oracle") {
  std::vector<double> hs{-3.0, -1.0, -0.2, 0.0, 0.7, 2.5};
  std::vector<double> rhos{-0.999, -0.95, -0.6, -0.2, 0.0,
                           0.2,    0.55,  0.9,  0.99, 0.9999};
  for (double rho : rhos)
    for (double h : hs)
      for (double k : hs) {
        double got = bvn_cdf(h, k, rho);
        double want = oracle::bvn_cdf(h, k, rho);
        CHECK(std::abs(got - want) <= 1e-7);
      }
}

TEST_CASE("affine-bound cdf") {
  for (double c : {-1.0, 0.3, 2.0})
    for (double a : {-0.5, 0.0, 1.2})
      for (double b : {-2.0, 0.0, 0.7}) {
        double want = oracle::integrate(
            [&](double x) { return oracle::norm_pdf(x) * oracle::norm_cdf(a + b * x); },
            -10.0, c);
        CHECK(gauss_affine_cdf(c, a, b) == doctest::Approx(want).epsilon(5e-7));
      }
}

TEST_CASE("envelope band probabilities") {
  // No bounds: plain interval probability.
  CHECK(gauss_envelope_prob(-1.0, 2.0, {}, {}) ==
        doctest::Approx(oracle::norm_cdf(2.0) - oracle::norm_cdf(-1.0))
            .epsilon(1e-9));
  // Single upper bound equals the affine cdf difference.
  std::vector<AffineBound> one_up{{0.4, -0.8}};
  CHECK(gauss_envelope_prob(-1.5, 1.0, one_up, {}) ==
        doctest::Approx(oracle::envelope_prob(-1.5, 1.0, one_up, {}))
            .epsilon(1e-7));
  // Crossing bounds on both sides.
  std::vector<AffineBound> ups{{1.0, -1.0}, {0.2, 0.5}};
  std::vector<AffineBound> lows{{-1.2, 0.3}, {-0.4, -0.6}};
  double got = gauss_envelope_prob(-2.5, 2.5, ups, lows);
  double want = oracle::envelope_prob(-2.5, 2.5, ups, lows);
  CHECK(got == doctest::Approx(want).epsilon(2e-6));
  // Empty interval.
  CHECK(gauss_envelope_prob(1.0, 1.0, {}, {}) == 0.0);
  CHECK(gauss_envelope_prob(2.0, -1.0, ups, lows) == 0.0);
}

TEST_CASE("gauss-legendre nodes integrate polynomials exactly") {
  for (int n : {6, 12, 16}) {
    const auto& gl = gauss_legendre(n);
    REQUIRE(static_cast<int>(gl.x.size()) == n);
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double got = 0.0;
      for (int i = 0; i < n; ++i) got += gl.w[i] * std::pow(gl.x[i], deg);
      double want = (deg % 2 == 0) ? 2.0 / (deg + 1) : 0.0;
      CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_SUITE_END();
