// Share-inversion tests: closed-form single-good case, round trips through
// the smoothed share maps for every menu type, contraction monotonicity,
// Jacobian sign patterns, and rejection of infeasible or unsupported targets.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>

#include "doctest.h"
#include "rcdemand/demand.hpp"
#include "rcdemand/density.hpp"
#include "rcdemand/invert.hpp"
#include "rcdemand/model.hpp"
#include "rcdemand/rng.hpp"

using namespace rcd;

namespace {

Eigen::VectorXd evec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ModelSpec logit_spec(int n_goods) {
  ModelSpec spec;
  spec.menu = MenuKind::multinomial;
  spec.n_goods = n_goods;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;
  spec.eps = EpsSpec::gumbel();
  return spec;
}

ModelSpec bundle_spec() {
  ModelSpec spec;
  spec.menu = MenuKind::bundles2;
  spec.n_goods = 2;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;
  spec.eps = EpsSpec::normal_iid(2);
  return spec;
}

ModelSpec multiunit_spec() {
  ModelSpec spec;
  spec.menu = MenuKind::multiunit2;
  spec.n_goods = 2;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;
  spec.eps = EpsSpec::normal_iid(2);
  return spec;
}

// (beta2, alpha, Delta) coefficients for the bundle menu.
CoefficientDensity bundle_density() {
  Eigen::VectorXd mean = evec({1.0, -1.0, 0.3});
  Eigen::MatrixXd cov = evec({0.04, 0.09, 0.04}).asDiagonal();
  return CoefficientDensity::gaussian(mean, cov);
}

// (beta2, alpha, D20, D21, D11) coefficients for the multi-unit menu.
CoefficientDensity multiunit_density() {
  Eigen::VectorXd mean = evec({1.0, -1.0, -0.8, 0.1, 0.4});
  Eigen::MatrixXd cov = evec({0.04, 0.04, 0.01, 0.01, 0.01}).asDiagonal();
  return CoefficientDensity::gaussian(mean, cov);
}

ProductMenu two_good_menu() {
  ProductMenu menu;
  menu.x2 = evec({0.5, -0.3});
  menu.p = evec({1.0, 1.4});
  menu.delta = Eigen::VectorXd::Zero(2);
  return menu;
}

}  // namespace

TEST_SUITE_BEGIN("invert");

TEST_CASE("recover_xi subtracts the observed index") {
  CHECK(recover_xi(evec({0.5}), evec({0.2}))[0] == doctest::Approx(0.3));
  CHECK(recover_xi(evec({0.0}), evec({0.0}))[0] == 0.0);
  Eigen::VectorXd xi =
      recover_xi(evec({1.0, -0.5, 0.25}), evec({0.4, 0.1, 0.25}));
  CHECK(xi.isApprox(evec({0.6, -0.6, 0.0}), 1e-15));
  CHECK_THROWS_AS(recover_xi(evec({1.0}), evec({1.0, 2.0})), Error);
}

TEST_CASE("single-good logit inverts the closed form") {
  // Point mass at (beta2, alpha): share 1 - e^{-1} pins v = 0, so
  // delta = -x2 * beta2 - alpha * p.
  ModelSpec spec = logit_spec(1);
  CoefficientDensity density =
      CoefficientDensity::point_mass(evec({0.8, -1.2}));
  Eigen::MatrixXd x2(1, 1);
  x2 << 0.4;
  Eigen::VectorXd p = evec({1.1});
  const double target = 1.0 - std::exp(-1.0);
  InversionResult res = invert_multinomial(spec, density, x2, p,
                                           evec({target}));
  const double expected = -0.4 * 0.8 - (-1.2) * 1.1;
  CHECK(res.delta[0] == doctest::Approx(expected).epsilon(1e-7));
  CHECK(res.residual_norm <= 1e-8);
}

TEST_CASE("mixed-logit round trip over a box of deltas") {
  ModelSpec spec = logit_spec(3);
  Eigen::VectorXd mean = evec({1.0, -1.0});
  Eigen::MatrixXd cov = evec({0.25, 0.25}).asDiagonal();
  CoefficientDensity density = CoefficientDensity::gaussian(mean, cov);
  Eigen::MatrixXd x2(3, 1);
  x2 << 0.5, -0.2, 0.8;
  Eigen::VectorXd p = evec({1.0, 0.7, 1.3});
  ShareMapOptions opts;
  opts.n_draws = 128;

  ProductMenu menu;
  menu.x2 = x2;
  menu.p = p;
  Stream st(77, 9);
  for (int rep = 0; rep < 8; ++rep) {
    Eigen::VectorXd delta_star(3);
    for (int j = 0; j < 3; ++j)
      delta_star[j] = -1.0 + 2.0 * st.uniform(3 * rep + j);
    menu.delta = delta_star;
    Eigen::VectorXd s = aggregate_shares_smoothed(spec, density, menu,
                                                  opts.n_draws, opts.seed);
    InversionResult res = invert_multinomial(spec, density, x2, p, s.tail(3),
                                             1e-8, 200, opts);
    CHECK((res.delta - delta_star).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK(res.residual_norm <= 1e-8);
  }
}

TEST_CASE("halton share map round trip") {
  ModelSpec spec = logit_spec(2);
  Eigen::VectorXd mean = evec({1.0, -1.0});
  Eigen::MatrixXd cov = evec({0.16, 0.09}).asDiagonal();
  CoefficientDensity density = CoefficientDensity::gaussian(mean, cov);
  Eigen::MatrixXd x2(2, 1);
  x2 << 0.3, -0.4;
  Eigen::VectorXd p = evec({0.9, 1.2});
  ShareMapOptions opts;
  opts.n_draws = 128;
  opts.halton = true;

  ProductMenu menu;
  menu.x2 = x2;
  menu.p = p;
  menu.delta = evec({0.4, -0.1});
  Eigen::VectorXd s = aggregate_shares_smoothed(spec, density, menu,
                                                opts.n_draws, opts.seed, true);
  InversionResult res =
      invert_multinomial(spec, density, x2, p, s.tail(2), 1e-8, 200, opts);
  CHECK((res.delta - menu.delta).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("contraction residuals decrease monotonically") {
  ModelSpec spec = logit_spec(3);
  Eigen::VectorXd mean = evec({1.0, -1.0});
  Eigen::MatrixXd cov = evec({0.25, 0.25}).asDiagonal();
  CoefficientDensity density = CoefficientDensity::gaussian(mean, cov);
  Eigen::MatrixXd x2(3, 1);
  x2 << 0.5, -0.2, 0.8;
  Eigen::VectorXd p = evec({1.0, 0.7, 1.3});
  InversionResult res = invert_multinomial(
      spec, density, x2, p, evec({0.35, 0.25, 0.2}), 1e-8, 200, {64, 11, false});
  REQUIRE(res.contraction_residuals.size() >= 2);
  for (std::size_t k = 1; k < res.contraction_residuals.size(); ++k)
    CHECK(res.contraction_residuals[k] <=
          res.contraction_residuals[k - 1] + 1e-14);
  CHECK(res.residual_norm <= 1e-8);
}

TEST_CASE("pure-characteristics round trip without taste shocks") {
  // Distinct price slopes keep every alternative's winning region interior,
  // so all shares respond to both vertical indices.
  ModelSpec spec = logit_spec(2);
  spec.sigma_eps = 0.0;
  Eigen::VectorXd mean = evec({1.0, -0.8});
  Eigen::MatrixXd cov(2, 2);
  cov << 0.25, 0.05, 0.05, 0.16;
  CoefficientDensity density = CoefficientDensity::gaussian(mean, cov);
  Eigen::MatrixXd x2(2, 1);
  x2 << 0.6, -0.2;
  Eigen::VectorXd p = evec({1.0, 2.0});
  ShareMapOptions opts;
  opts.n_draws = 128;

  ProductMenu menu;
  menu.x2 = x2;
  menu.p = p;
  menu.delta = evec({0.2, 1.3});
  Eigen::VectorXd s = aggregate_shares_smoothed(spec, density, menu,
                                                opts.n_draws, opts.seed);
  REQUIRE(s.minCoeff() > 0.05);  // interior design: inversion well-posed
  InversionResult res =
      invert_multinomial(spec, density, x2, p, s.tail(2), 1e-8, 200, opts);
  CHECK((res.delta - menu.delta).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK(res.contraction_residuals.empty());
}

TEST_CASE("multinomial target validation") {
  ModelSpec spec = logit_spec(2);
  CoefficientDensity density =
      CoefficientDensity::point_mass(evec({1.0, -1.0}));
  Eigen::MatrixXd x2(2, 1);
  x2 << 0.5, -0.3;
  Eigen::VectorXd p = evec({1.0, 1.4});
  CHECK_THROWS_AS(invert_multinomial(spec, density, x2, p, evec({0.0, 0.4})),
                  Error);
  CHECK_THROWS_AS(invert_multinomial(spec, density, x2, p, evec({0.6, 0.5})),
                  Error);
  CHECK_THROWS_AS(invert_multinomial(spec, density, x2, p, evec({0.5})),
                  Error);
}

TEST_CASE("bundle round trip on both subsystems") {
  ModelSpec spec = bundle_spec();
  CoefficientDensity density = bundle_density();
  ProductMenu menu = two_good_menu();
  ShareMapOptions opts;
  opts.n_draws = 64;

  menu.delta = evec({0.3, -0.2});
  Eigen::VectorXd s = aggregate_shares_smoothed(spec, density, menu,
                                                opts.n_draws, opts.seed);
  // Alternatives are labeled 00, 10, 01, 11 in that order.
  InversionResult r0 = invert_bundles(spec, density, menu.x2, menu.p,
                                      {s[0], s[2]}, {{"00", "01"}}, 1e-8, 200,
                                      opts);
  CHECK((r0.delta - menu.delta).lpNorm<Eigen::Infinity>() <= 1e-6);
  InversionResult r1 = invert_bundles(spec, density, menu.x2, menu.p,
                                      {s[1], s[3]}, {{"10", "11"}}, 1e-8, 200,
                                      opts);
  CHECK((r1.delta - menu.delta).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("bundle Jacobian determinant is negative over a box") {
  ModelSpec spec = bundle_spec();
  CoefficientDensity density = bundle_density();
  ProductMenu menu = two_good_menu();
  const int n_draws = 48;
  auto shares_at = [&](double d1, double d2) {
    menu.delta = evec({d1, d2});
    return aggregate_shares_smoothed(spec, density, menu, n_draws, 5);
  };
  // Canonical row orders: (00,01) and (11,10).
  const std::array<std::array<int, 2>, 2> rows{{{0, 2}, {3, 1}}};
  Stream st(99, 3);
  for (int rep = 0; rep < 12; ++rep) {
    const double d1 = -1.0 + 2.0 * st.uniform(2 * rep);
    const double d2 = -1.0 + 2.0 * st.uniform(2 * rep + 1);
    const double h = 1e-5;
    Eigen::VectorXd sp1 = shares_at(d1 + h, d2);
    Eigen::VectorXd sm1 = shares_at(d1 - h, d2);
    Eigen::VectorXd sp2 = shares_at(d1, d2 + h);
    Eigen::VectorXd sm2 = shares_at(d1, d2 - h);
    for (const auto& row : rows) {
      Eigen::Matrix2d jac;
      for (int i = 0; i < 2; ++i) {
        jac(i, 0) = (sp1[row[i]] - sm1[row[i]]) / (2 * h);
        jac(i, 1) = (sp2[row[i]] - sm2[row[i]]) / (2 * h);
      }
      CHECK(jac.determinant() < 0.0);
    }
  }
}

TEST_CASE("bundle inversion rejects infeasible targets") {
  ModelSpec spec = bundle_spec();
  CoefficientDensity density = bundle_density();
  ProductMenu menu = two_good_menu();
  ShareMapOptions opts;
  opts.n_draws = 32;
  // Shares of 00 and 01 cannot sum to 1.4.
  CHECK_THROWS_AS(invert_bundles(spec, density, menu.x2, menu.p, {0.7, 0.7},
                                 {{"00", "01"}}, 1e-8, 60, opts),
                  InversionError);
  try {
    invert_bundles(spec, density, menu.x2, menu.p, {0.7, 0.7}, {{"00", "01"}},
                   1e-8, 60, opts);
  } catch (const InversionError& e) {
    CHECK(e.best().residual_norm > 1e-3);
    CHECK(e.best().delta.size() == 2);
    CHECK(e.best().delta.allFinite());
  }
}

TEST_CASE("bundle subsystem and target validation") {
  ModelSpec spec = bundle_spec();
  CoefficientDensity density = bundle_density();
  ProductMenu menu = two_good_menu();
  CHECK_THROWS_AS(invert_bundles(spec, density, menu.x2, menu.p, {0.2, 0.2},
                                 {{"00", "11"}}),
                  Error);
  CHECK_THROWS_AS(invert_bundles(spec, density, menu.x2, menu.p, {0.2, 1.2},
                                 {{"00", "01"}}),
                  Error);
  ModelSpec gumbel = bundle_spec();
  gumbel.eps = EpsSpec::gumbel();
  CHECK_THROWS_AS(invert_bundles(gumbel, density, menu.x2, menu.p, {0.2, 0.2},
                                 {{"00", "01"}}),
                  Error);
}

TEST_CASE("multi-unit round trip on both admissible subsystems") {
  ModelSpec spec = multiunit_spec();
  CoefficientDensity density = multiunit_density();
  ProductMenu menu = two_good_menu();
  ShareMapOptions opts;
  opts.n_draws = 64;

  menu.delta = evec({0.4, -0.1});
  Eigen::VectorXd s = aggregate_shares_smoothed(spec, density, menu,
                                                opts.n_draws, opts.seed);
  // Alternatives are labeled 00, 10, 01, 11, 20, 21 in that order.
  InversionResult r0 = invert_multiunit(spec, density, menu.x2, menu.p,
                                        {s[0], s[2]}, {{"00", "01"}}, 1e-8,
                                        200, opts);
  CHECK((r0.delta - menu.delta).lpNorm<Eigen::Infinity>() <= 1e-6);
  InversionResult r2 = invert_multiunit(spec, density, menu.x2, menu.p,
                                        {s[4], s[5]}, {{"20", "21"}}, 1e-8,
                                        200, opts);
  CHECK((r2.delta - menu.delta).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("multi-unit rejects subsystems with middle alternatives") {
  ModelSpec spec = multiunit_spec();
  CoefficientDensity density = multiunit_density();
  ProductMenu menu = two_good_menu();
  CHECK_THROWS_AS(invert_multiunit(spec, density, menu.x2, menu.p, {0.2, 0.2},
                                   {{"10", "11"}}),
                  Error);
  CHECK_THROWS_AS(invert_multiunit(spec, density, menu.x2, menu.p, {0.2, 0.2},
                                   {{"00", "10"}}),
                  Error);
}

TEST_CASE("multi-unit double-purchase shares are monotone in delta") {
  ModelSpec spec = multiunit_spec();
  CoefficientDensity density = multiunit_density();
  ProductMenu menu = two_good_menu();
  const int n_draws = 48;
  auto shares_at = [&](double d1, double d2) {
    menu.delta = evec({d1, d2});
    return aggregate_shares_smoothed(spec, density, menu, n_draws, 5);
  };
  const double h = 1e-4;
  for (double d1 : {-0.5, 0.2}) {
    for (double d2 : {-0.3, 0.4}) {
      Eigen::VectorXd sp1 = shares_at(d1 + h, d2);
      Eigen::VectorXd sm1 = shares_at(d1 - h, d2);
      Eigen::VectorXd sp2 = shares_at(d1, d2 + h);
      Eigen::VectorXd sm2 = shares_at(d1, d2 - h);
      // share of 20: up in delta_1, down in delta_2; share of 21: up in both.
      CHECK(sp1[4] - sm1[4] > 0.0);
      CHECK(sp2[4] - sm2[4] < 0.0);
      CHECK(sp1[5] - sm1[5] > 0.0);
      CHECK(sp2[5] - sm2[5] > 0.0);
    }
  }
}

TEST_CASE("iteration cap raises an error carrying the best iterate") {
  ModelSpec spec = bundle_spec();
  CoefficientDensity density = bundle_density();
  ProductMenu menu = two_good_menu();
  ShareMapOptions opts;
  opts.n_draws = 32;
  menu.delta = evec({0.9, -0.8});
  Eigen::VectorXd s = aggregate_shares_smoothed(spec, density, menu,
                                                opts.n_draws, opts.seed);
  try {
    invert_bundles(spec, density, menu.x2, menu.p, {s[0], s[2]}, {{"00", "01"}},
                   1e-12, 1, opts);
    FAIL("expected non-convergence");
  } catch (const InversionError& e) {
    CHECK(e.best().delta.allFinite());
    CHECK(e.best().iterations <= 1);
  }
}

TEST_SUITE_END();
