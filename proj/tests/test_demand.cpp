#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "rcdemand/common.hpp"
#include "rcdemand/demand.hpp"

using namespace rcd;

namespace {

ProductMenu menu1(double x2, double p, double delta) {
  ProductMenu m;
  m.x2.resize(1, 1);
  m.x2 << x2;
  m.p.resize(1);
  m.p << p;
  m.delta.resize(1);
  m.delta << delta;
  return m;
}

ProductMenu menu2(double x21, double p1, double d1, double x22, double p2,
                  double d2) {
  ProductMenu m;
  m.x2.resize(2, 1);
  m.x2 << x21, x22;
  m.p.resize(2);
  m.p << p1, p2;
  m.delta.resize(2);
  m.delta << d1, d2;
  return m;
}

CoefficientDensity normal_density(const Eigen::VectorXd& mean, double sd) {
  return CoefficientDensity::gaussian(
      mean, sd * sd * Eigen::MatrixXd::Identity(mean.size(), mean.size()));
}

Eigen::VectorXd evec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("demand");

TEST_CASE("utilities by direct substitution") {
  ModelSpec spec;
  spec.menu = MenuKind::multinomial;
  spec.n_goods = 1;
  spec.d_x = 1;  // no extra characteristics
  spec.sigma_eps = 0.0;
  CoefficientDraw draw;
  draw.beta2.resize(0);
  draw.alpha = -1.0;
  draw.eps = Eigen::VectorXd::Zero(1);
  draw.bundle_effects.resize(0);
  ProductMenu m;
  m.x2.resize(1, 0);
  m.p = evec({0.0});
  m.delta = evec({0.5});
  Eigen::VectorXd u = utilities(spec, draw, m);
  CHECK(u[0] == 0.0);
  CHECK(u[1] == 0.5);

  // Bundle with zero characteristics: only the bundle effect remains.
  ModelSpec bspec;
  bspec.menu = MenuKind::bundles2;
  bspec.n_goods = 2;
  bspec.d_x = 2;
  bspec.sigma_eps = 0.0;
  CoefficientDraw bdraw;
  bdraw.beta2 = evec({1.0});
  bdraw.alpha = -1.0;
  bdraw.eps = Eigen::VectorXd::Zero(2);
  bdraw.bundle_effects = evec({0.3});
  ProductMenu bm = menu2(0, 0, 0, 0, 0, 0);
  Eigen::VectorXd bu = utilities(bspec, bdraw, bm);
  CHECK(bu[0] == 0.0);
  CHECK(bu[1] == 0.0);
  CHECK(bu[2] == 0.0);
  CHECK(bu[3] == doctest::Approx(0.3));

  // Two units of good 1: twice the single-unit utility plus the effect.
  ModelSpec mspec = bspec;
  mspec.menu = MenuKind::multiunit2;
  CoefficientDraw mdraw = bdraw;
  mdraw.bundle_effects = evec({0.1, -0.5, 0.0});
  ProductMenu mm = menu2(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);  // v1 = 1
  Eigen::VectorXd mu = utilities(mspec, mdraw, mm);
  CHECK(mu[4] == doctest::Approx(2.0 * 1.0 - 0.5));
}

TEST_CASE("choice rule") {
  CHECK(choose(evec({0.0, 0.5})) == 1);
  CHECK(choose(evec({0.0, 0.0, 0.0})) == 0);  // ties break low
  CHECK_THROWS_AS((void)choose(evec({0.0, std::nan("")})), Error);
  // The argmax beats every quantity neighbor for multi-unit menus.
  Eigen::VectorXd u = evec({0.0, 1.0, -0.2, 1.4, 0.9, 1.1});
  CHECK(multiunit_neighbors_beaten(u, choose(u)));
}

TEST_CASE("deterministic pure-characteristics shares") {
  ModelSpec spec;
  spec.menu = MenuKind::multinomial;
  spec.n_goods = 1;
  spec.d_x = 2;
  spec.sigma_eps = 0.0;
  auto d = CoefficientDensity::point_mass(evec({1.0, -0.5}));
  // index = 1*1 + (-0.5)*1 + 0 = 0.5 > 0: good always chosen.
  auto s = aggregate_shares_mc(spec, d, menu1(1.0, 1.0, 0.0), 1000, 4);
  CHECK(s[0] == 0.0);
  CHECK(s[1] == 1.0);
}

TEST_CASE("single-good logit against the Gumbel closed form") {
  ModelSpec spec;
  spec.menu = MenuKind::multinomial;
  spec.n_goods = 1;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;
  auto d = CoefficientDensity::point_mass(evec({0.5, -1.0}));
  // v = 0.5*2 - 1*1 + 0 = 0
  ProductMenu m = menu1(2.0, 1.0, 0.0);
  const int n = 1000000;
  auto s = aggregate_shares_mc(spec, d, m, n, 2024);
  const double target = 0.6321205588285577;  // 1 - e^{-1}
  CHECK(std::abs(s[1] - target) <= 3.0 * oracle::mc_se(target, n));

  CoefficientDraw draw;
  draw.beta2 = evec({0.5});
  draw.alpha = -1.0;
  draw.bundle_effects.resize(0);
  auto cl = conditional_logit_shares(spec, draw, m);
  CHECK(cl[1] == doctest::Approx(target).epsilon(1e-15));
  CHECK(cl[0] == doctest::Approx(1.0 - target).epsilon(1e-15));
}

TEST_CASE("two symmetric goods split the Gumbel closed form") {
  ModelSpec spec;
  spec.menu = MenuKind::multinomial;
  spec.n_goods = 2;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;
  CoefficientDraw draw;
  draw.beta2 = evec({1.0});
  draw.alpha = -1.0;
  draw.bundle_effects.resize(0);
  ProductMenu m = menu2(1.0, 1.0, 0.0, 1.0, 1.0, 0.0);  // v1 = v2 = 0
  auto cl = conditional_logit_shares(spec, draw, m);
  const double target = 0.43233235838169365;  // (1/2)(1 - e^{-2})
  CHECK(cl[1] == doctest::Approx(target).epsilon(1e-15));
  CHECK(cl[2] == doctest::Approx(target).epsilon(1e-15));
  // Confirmed against the raw simulator.
  auto d = CoefficientDensity::point_mass(evec({1.0, -1.0}));
  const int n = 1000000;
  auto s = aggregate_shares_mc(spec, d, m, n, 77);
  CHECK(std::abs(s[1] - target) <= 3.0 * oracle::mc_se(target, n));
  // Outside utility is deterministic: shares vanish as indices grow.
  ProductMenu far = menu2(1.0, 1.0, -30.0, 1.0, 1.0, -30.0);
  auto cfar = conditional_logit_shares(spec, draw, far);
  CHECK(cfar[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("bundle ordering with deterministic tastes") {
  ModelSpec spec;
  spec.menu = MenuKind::bundles2;
  spec.n_goods = 2;
  spec.d_x = 2;
  spec.sigma_eps = 0.0;
  auto d = CoefficientDensity::point_mass(evec({1.0, -1.0, 0.3}));
  auto s = aggregate_shares_mc(spec, d, menu2(0, 0, 0, 0, 0, 0), 100, 9);
  CHECK(s[3] == 1.0);  // the (1,1) bundle strictly wins by the 0.3 effect
}

TEST_CASE("parallel and serial simulators agree bit for bit") {
  ModelSpec spec;
  spec.menu = MenuKind::bundles2;
  spec.n_goods = 2;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;
  spec.eps = EpsSpec::normal_iid(2);
  auto d = normal_density(evec({1.0, -1.0, 0.2}), 0.5);
  ProductMenu m = menu2(0.5, 0.3, 0.1, -0.2, 0.6, -0.3);
  auto a = aggregate_shares_mc(spec, d, m, 100001, 31);
  auto b = aggregate_shares_mc_serial(spec, d, m, 100001, 31);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("shares sum to one") {
  ModelSpec spec;
  spec.menu = MenuKind::multiunit2;
  spec.n_goods = 2;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;
  auto d = normal_density(evec({0.5, -0.8, 0.2, -0.4, -0.1}), 0.3);
  ProductMenu m = menu2(0.4, 0.2, 0.3, -0.1, 0.5, 0.2);
  auto s = aggregate_shares_mc(spec, d, m, 40000, 5);
  CHECK(std::abs(s.sum() - 1.0) <= 1e-12);
  CHECK(s.minCoeff() >= 0.0);

  spec.eps = EpsSpec::normal_iid(2);
  auto sm = aggregate_shares_smoothed(spec, d, m, 300, 5);
  CHECK(std::abs(sm.sum() - 1.0) <= 1e-12);
}

TEST_CASE("mixed logit smoothing agrees with raw simulation") {
  ModelSpec spec;
  spec.menu = MenuKind::multinomial;
  spec.n_goods = 2;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;
  auto d = normal_density(evec({0.8, -1.2}), 0.6);
  ProductMenu m = menu2(1.0, 0.8, 0.2, 0.6, 1.1, -0.1);
  const int n = 400000;
  auto raw = aggregate_shares_mc(spec, d, m, n, 13);
  auto smooth = aggregate_shares_smoothed(spec, d, m, 20000, 13);
  for (int a = 0; a < 3; ++a)
    CHECK(std::abs(raw[a] - smooth[a]) <=
          3.0 * oracle::mc_se(smooth[a], n) + 0.004);
}

TEST_CASE("normal-taste bundle smoothing agrees with raw simulation") {
  ModelSpec spec;
  spec.menu = MenuKind::bundles2;
  spec.n_goods = 2;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.3, 0.3, 1.4;
  spec.eps = EpsSpec::normal(cov);
  ProductMenu m = menu2(0.5, 0.4, 0.3, -0.3, 0.7, -0.2);
  for (double dmean : {-0.6, 0.4}) {
    auto d = normal_density(evec({0.7, -0.9, dmean}), 0.4);
    const int n = 400000;
    auto raw = aggregate_shares_mc(spec, d, m, n, 21);
    auto smooth = aggregate_shares_smoothed(spec, d, m, 4000, 21);
    for (int a = 0; a < 4; ++a)
      CHECK(std::abs(raw[a] - smooth[a]) <=
            3.0 * oracle::mc_se(std::max(smooth[a], 0.01), n) + 0.005);
  }
}

TEST_CASE("normal-taste multi-unit smoothing agrees with raw simulation") {
  ModelSpec spec;
  spec.menu = MenuKind::multiunit2;
  spec.n_goods = 2;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;
  spec.eps = EpsSpec::normal_iid(2);
  auto d = normal_density(evec({0.5, -0.7, 0.3, -0.6, 0.1}), 0.3);
  ProductMenu m = menu2(0.6, 0.5, 0.4, -0.2, 0.8, 0.3);
  const int n = 400000;
  auto raw = aggregate_shares_mc(spec, d, m, n, 33);
  auto smooth = aggregate_shares_smoothed(spec, d, m, 4000, 33);
  for (int a = 0; a < 6; ++a)
    CHECK(std::abs(raw[a] - smooth[a]) <=
          3.0 * oracle::mc_se(std::max(smooth[a], 0.01), n) + 0.005);
}

TEST_CASE("pure-characteristics smoothing agrees with raw simulation") {
  ModelSpec spec;
  spec.menu = MenuKind::multinomial;
  spec.n_goods = 2;
  spec.d_x = 2;
  spec.sigma_eps = 0.0;
  Eigen::MatrixXd cov(2, 2);
  cov << 0.5, -0.1, -0.1, 0.8;
  auto d = CoefficientDensity::gaussian(evec({1.0, -1.0}), cov);
  ProductMenu m = menu2(0.9, 0.7, 0.1, 0.4, 1.0, 0.3);
  const int n = 400000;
  auto raw = aggregate_shares_mc(spec, d, m, n, 41);
  auto smooth = aggregate_shares_smoothed(spec, d, m, 20000, 41);
  for (int a = 0; a < 3; ++a)
    CHECK(std::abs(raw[a] - smooth[a]) <=
          3.0 * oracle::mc_se(std::max(smooth[a], 0.01), n) + 0.004);
}

TEST_CASE("share monotonicity in the vertical index") {
  ModelSpec spec;
  spec.menu = MenuKind::multinomial;
  spec.n_goods = 2;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;
  auto d = normal_density(evec({0.8, -1.0}), 0.5);
  ProductMenu lo = menu2(1.0, 0.8, 0.0, 0.6, 1.1, 0.1);
  ProductMenu hi = lo;
  hi.delta[0] = 0.4;
  auto s0 = aggregate_shares_smoothed(spec, d, lo, 4000, 8);
  auto s1 = aggregate_shares_smoothed(spec, d, hi, 4000, 8);
  CHECK(s1[1] > s0[1]);
  CHECK(s1[2] < s0[2]);
  CHECK(s1[0] < s0[0]);
}

TEST_CASE("bundle pair probability branches") {
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(bundle_pair_probability(0.0, 0.0, 0.0, true, id) ==
        doctest::Approx(0.25).epsilon(1e-9));
  CHECK(bundle_pair_probability(inf, inf, 0.0, true, id) == 1.0);
  // P(e1 < 0, e1 + e2 < 0) = 3/8 for independent standard normals.
  CHECK(bundle_pair_probability(0.0, 0.0, 0.0, false, id) ==
        doctest::Approx(0.375).epsilon(1e-8));
  // General covariance against the quadrature oracle.
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.3, 0.3, 1.5;
  double s1 = 1.0, ss = std::sqrt(1.0 + 2.0 * 0.3 + 1.5);
  double want = oracle::bvn_cdf(0.4 / s1, -0.2 / ss,
                                (1.0 + 0.3) / (s1 * ss));
  CHECK(bundle_pair_probability(0.0, 0.4, -0.2, false, cov) ==
        doctest::Approx(want).epsilon(1e-6));
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(
      (void)bundle_pair_probability(0, 0, 0, true, bad), Error);
}

TEST_CASE("simulated bundle shares") {
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  ProductMenu m = menu2(0, 0, 0, 0, 0, 0);
  // Point mass with negative bundle effect: the (0,0) share is the
  // lower-quadrant probability from the pair formula.
  auto dpoint = CoefficientDensity::point_mass(evec({1.0, -1.0, -0.4}));
  auto s = simulated_bundle_shares(m, dpoint, 1, 7, id);
  // All indices are zero, so (0,0) wins iff e1 < 0 and e2 < 0 given the
  // negative bundle effect makes the joint constraint redundant.
  CHECK(s[0] ==
        doctest::Approx(bundle_pair_probability(0, 0, 0, true, id))
            .epsilon(1e-7));
  // Reproducible for a fixed seed.
  auto dnorm = normal_density(evec({1.0, -1.0, 0.3}), 0.4);
  auto s1 = simulated_bundle_shares(m, dnorm, 500, 11, id);
  auto s2 = simulated_bundle_shares(m, dnorm, 500, 11, id);
  CHECK((s1 - s2).cwiseAbs().maxCoeff() == 0.0);
  // Quasi-random option also reproducible and close to pseudo-random.
  auto sq = simulated_bundle_shares(m, dnorm, 500, 11, id, true);
  CHECK((s1 - sq).cwiseAbs().maxCoeff() <= 0.02);
  // Agreement with the raw simulator that draws the taste shocks too.
  ModelSpec spec;
  spec.menu = MenuKind::bundles2;
  spec.n_goods = 2;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;
  spec.eps = EpsSpec::normal_iid(2);
  const int n = 400000;
  auto raw = aggregate_shares_mc(spec, dnorm, m, n, 19);
  auto sm = simulated_bundle_shares(m, dnorm, 4000, 19, id);
  for (int a = 0; a < 4; ++a)
    CHECK(std::abs(raw[a] - sm[a]) <=
          3.0 * oracle::mc_se(std::max(sm[a], 0.01), n) + 0.005);
}

TEST_CASE("configuration errors") {
  ModelSpec spec;
  spec.menu = MenuKind::bundles2;
  spec.n_goods = 2;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;  // Gumbel tastes: no closed form for bundles
  auto d = normal_density(evec({1.0, -1.0, 0.2}), 0.3);
  ProductMenu m = menu2(0, 0, 0, 0, 0, 0);
  CHECK_THROWS_AS(
      (void)aggregate_shares_smoothed(spec, d, m, 100, 1), Error);
  ModelSpec bad = spec;
  bad.n_goods = 3;
  CHECK_THROWS_AS((void)bad.validate(), Error);
}

TEST_SUITE_END();
