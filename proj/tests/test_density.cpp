#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "rcdemand/common.hpp"
#include "rcdemand/density.hpp"

using namespace rcd;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

DensityGrid gaussian_grid_1d(double lo, double hi, int n, double mean,
                             double sd) {
  DensityGrid g({GridAxis{lo, hi, n}});
  for (int i = 0; i < n; ++i) {
    double x = g.axis(0).node(i);
    g[i] = oracle::norm_pdf((x - mean) / sd) / sd;
  }
  g.normalize();
  return g;
}

}  // namespace

TEST_SUITE_BEGIN("density");

TEST_CASE("point mass") {
  auto d = CoefficientDensity::point_mass(vec2(1.5, -0.5));
  Stream st(1, 0);
  double out[2];
  d.sample(st, 0, out);
  CHECK(out[0] == 1.5);
  CHECK(out[1] == -0.5);
  CHECK(d.projection_cdf(vec2(1.0, 0.0), 1.5) == 1.0);
  CHECK(d.projection_cdf(vec2(1.0, 0.0), 1.4) == 0.0);
  CHECK_THROWS_AS((void)d.pdf(vec2(0, 0)), Error);
}

TEST_CASE("standard bivariate gaussian") {
  auto d = CoefficientDensity::gaussian(Eigen::VectorXd::Zero(2),
                                        Eigen::MatrixXd::Identity(2, 2));
  CHECK(d.pdf(vec2(0, 0)) ==
        doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-12));

  // Rotational symmetry: any unit direction projects to a standard normal.
  Eigen::VectorXd w = vec2(0.6, 0.8);
  for (double u : {-2.0, -0.3, 0.0, 1.1}) {
    CHECK(d.projection_pdf(w, u) ==
          doctest::Approx(oracle::norm_pdf(u)).epsilon(1e-12));
    CHECK(d.projection_cdf(w, u) ==
          doctest::Approx(oracle::norm_cdf(u)).epsilon(1e-12));
  }
}

TEST_CASE("gaussian sampling moments") {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.6, 0.6, 2.0;
  auto d = CoefficientDensity::gaussian(vec2(0.5, -1.0), cov);
  Stream st(99, 0);
  const int n = 200000;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d m2 = Eigen::Matrix2d::Zero();
  double out[2];
  for (int i = 0; i < n; ++i) {
    d.sample(st, i, out);
    Eigen::Vector2d x(out[0], out[1]);
    mean += x;
    m2 += x * x.transpose();
  }
  mean /= n;
  m2 = m2 / n - mean * mean.transpose();
  CHECK(std::abs(mean[0] - 0.5) <= 4.0 / std::sqrt(n));
  CHECK(std::abs(mean[1] + 1.0) <= 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m2(0, 1) - 0.6) <= 0.03);
  CHECK(std::abs(m2(1, 1) - 2.0) <= 0.06);
}

TEST_CASE("semidefinite gaussian degenerates cleanly") {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
  cov(0, 0) = 1.0;  // second component is a point mass
  auto d = CoefficientDensity::gaussian(vec2(0.0, 2.0), cov);
  Stream st(3, 0);
  double out[2];
  for (int i = 0; i < 10; ++i) {
    d.sample(st, i, out);
    CHECK(out[1] == doctest::Approx(2.0).epsilon(1e-15));
  }
  // Projection onto the degenerate coordinate is a step function.
  CHECK(d.projection_cdf(vec2(0.0, 1.0), 1.9) == 0.0);
  CHECK(d.projection_cdf(vec2(0.0, 1.0), 2.1) == 1.0);
  CHECK_THROWS_AS((void)d.pdf(vec2(0, 2)), Error);
  // Negative eigenvalue is rejected.
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS((void)CoefficientDensity::gaussian(vec2(0, 0), bad), Error);
}

TEST_CASE("mixture laws") {
  std::vector<CoefficientDensity> comps;
  comps.push_back(CoefficientDensity::gaussian(vec2(-1.0, 0.0),
                                               Eigen::MatrixXd::Identity(2, 2)));
  comps.push_back(CoefficientDensity::point_mass(vec2(2.0, 2.0)));
  auto d = CoefficientDensity::mixture({0.25, 0.75}, comps);

  Eigen::VectorXd w = vec2(1.0, 0.0);
  double u = 0.5;
  double want = 0.25 * oracle::norm_cdf(u + 1.0) + 0.75 * 0.0;
  CHECK(d.projection_cdf(w, u) == doctest::Approx(want).epsilon(1e-12));

  // Sampling proportions.
  Stream st(17, 0);
  const int n = 100000;
  int at_point = 0;
  std::vector<double> out(2);
  for (int i = 0; i < n; ++i) {
    d.sample(st, i, out.data());
    if (out[0] == 2.0 && out[1] == 2.0) ++at_point;
  }
  double p = static_cast<double>(at_point) / n;
  CHECK(std::abs(p - 0.75) <= 4.0 * oracle::mc_se(0.75, n));

  CHECK_THROWS_AS((void)CoefficientDensity::mixture({0.5, 0.6}, comps), Error);
}

TEST_CASE("grid density construction and interpolation") {
  DensityGrid g({GridAxis{-1.0, 1.0, 5}, GridAxis{0.0, 2.0, 3}});
  CHECK(g.size() == 15);
  // Constant density 0.25 on the 2x2 box has mass 1.
  for (std::int64_t i = 0; i < g.size(); ++i) g[i] = 0.25;
  CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-14));
  double x[2] = {0.3, 1.1};
  CHECK(g.interp(x) == doctest::Approx(0.25).epsilon(1e-14));
  double outside[2] = {1.5, 1.0};
  CHECK(g.interp(outside) == 0.0);

  auto d = CoefficientDensity::from_grid(g);
  CHECK(d.pdf(vec2(0.3, 1.1)) == doctest::Approx(0.25).epsilon(1e-14));

  // Mass far from 1 is rejected.
  DensityGrid bad = g;
  for (std::int64_t i = 0; i < bad.size(); ++i) bad[i] = 0.5;
  CHECK_THROWS_AS((void)CoefficientDensity::from_grid(bad), Error);
}

TEST_CASE("grid sampling matches the lattice law") {
  auto g = gaussian_grid_1d(-5.0, 5.0, 201, 0.3, 1.0);
  auto d = CoefficientDensity::from_grid(g);
  Stream st(5, 0);
  const int n = 200000;
  double s = 0.0, sq = 0.0;
  double x;
  for (int i = 0; i < n; ++i) {
    d.sample(st, i, &x);
    s += x;
    sq += x * x;
  }
  double mean = s / n;
  CHECK(std::abs(mean - 0.3) <= 4.0 / std::sqrt(n) + 2e-3);
  CHECK(std::abs(sq / n - mean * mean - 1.0) <= 0.02);
}

TEST_CASE("one-dimensional characteristic functions") {
  Eigen::VectorXd m1(1), p1(1);
  m1 << 0.0;
  Eigen::MatrixXd v1(1, 1);
  v1 << 1.0;
  auto gauss = CoefficientDensity::gaussian(m1, v1);
  p1 << 0.7;
  auto point = CoefficientDensity::point_mass(p1);
  for (double t : {-3.0, -0.5, 0.0, 1.0, 2.5}) {
    CHECK(std::abs(gauss.cf(t) - std::exp(-0.5 * t * t)) <= 1e-12);
    std::complex<double> want(std::cos(0.7 * t), std::sin(0.7 * t));
    CHECK(std::abs(point.cf(t) - want) <= 1e-12);
  }
  // Lattice version against the closed form.
  auto g = gaussian_grid_1d(-8.0, 8.0, 801, 0.0, 1.0);
  auto dg = CoefficientDensity::from_grid(g);
  for (double t : {-2.0, 0.0, 0.8, 3.0})
    CHECK(std::abs(dg.cf(t) - std::exp(-0.5 * t * t)) <= 1e-4);
}

TEST_CASE("grid projection quadrature against the closed form") {
  // 2-d standard normal on a lattice: hyperplane integrals should match the
  // 1-d normal density.
  const int n = 129;
  DensityGrid g({GridAxis{-6.0, 6.0, n}, GridAxis{-6.0, 6.0, n}});
  std::vector<int> idx(2);
  for (std::int64_t i = 0; i < g.size(); ++i) {
    g.unflatten(i, idx);
    double x = g.axis(0).node(idx[0]);
    double y = g.axis(1).node(idx[1]);
    g[i] = oracle::norm_pdf(x) * oracle::norm_pdf(y);
  }
  g.normalize();
  auto d = CoefficientDensity::from_grid(g);
  Eigen::VectorXd w = vec2(std::cos(0.4), std::sin(0.4));
  for (double u : {-1.5, 0.0, 0.9})
    CHECK(d.projection_pdf(w, u) ==
          doctest::Approx(oracle::norm_pdf(u)).epsilon(2e-3));
}

TEST_CASE("sampling is reproducible") {
  auto d = CoefficientDensity::gaussian(vec2(0, 0),
                                        Eigen::MatrixXd::Identity(2, 2));
  Stream a(11, 0), b(11, 0);
  double x[2], y[2];
  d.sample(a, 123, x);
  d.sample(b, 123, y);
  CHECK(x[0] == y[0]);
  CHECK(x[1] == y[1]);
  double q[2];
  d.sample_qmc(5, q);
  double q2[2];
  d.sample_qmc(5, q2);
  CHECK(q[0] == q2[0]);
}

TEST_SUITE_END();
