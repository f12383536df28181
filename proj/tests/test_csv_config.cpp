// CSV and config round trips: panels, sinograms, and grids must re-read to
// the exact doubles that were written; the config parser must handle
// sections, comments, lists, and typos strictly.

#include <cmath>
#include <cstring>
#include <sstream>
#include <string>

#include "doctest.h"
#include "rcdemand/config.hpp"
#include "rcdemand/csvio.hpp"
#include "rcdemand/gmm.hpp"
#include "rcdemand/panel.hpp"
#include "rcdemand/radon.hpp"

using namespace rcd;

namespace {

// Runs fn, expecting a config Error whose message mentions `needle`.
template <class Fn>
void check_throws_containing(Fn&& fn, const std::string& needle) {
  try {
    fn();
    FAIL_CHECK("expected a config error mentioning: " << needle);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

bool same_bits(double a, double b) {
  return std::memcmp(&a, &b, sizeof a) == 0;
}

MarketPanel small_bundle_panel() {
  ModelSpec spec;
  spec.menu = MenuKind::bundles2;
  spec.n_goods = 2;
  spec.d_x = 2;
  spec.sigma_eps = 1.0;
  spec.eps = EpsSpec::normal_iid(2);
  GmmSpec gs;
  gs.lower = Eigen::VectorXd::Constant(4, -1.0);
  gs.upper = Eigen::VectorXd::Constant(4, 1.0);
  Eigen::VectorXd gamma(4);
  gamma << -1.0, 0.3, 0.5, 0.2;
  PanelDgp dgp;
  dgp.share_draws = 128;
  return generate_panel(spec, bundle_gamma_density(gs, gamma), 3, dgp, 11);
}

MarketPanel small_logit_panel() {
  ModelSpec spec;
  spec.menu = MenuKind::multinomial;
  spec.n_goods = 3;
  spec.d_x = 3;
  spec.sigma_eps = 1.0;
  spec.eps = EpsSpec::gumbel();
  Eigen::VectorXd mean(3);
  mean << 1.0, 0.5, -0.8;
  Eigen::MatrixXd cov = 0.09 * Eigen::MatrixXd::Identity(3, 3);
  PanelDgp dgp;
  dgp.share_draws = 64;
  dgp.d_z = 2;
  return generate_panel(spec, CoefficientDensity::gaussian(mean, cov), 4, dgp,
                        5);
}

void check_panels_equal(const MarketPanel& a, const MarketPanel& b) {
  REQUIRE(a.markets.size() == b.markets.size());
  CHECK(a.menu == b.menu);
  CHECK(a.n_goods == b.n_goods);
  CHECK(a.d_x == b.d_x);
  CHECK(a.d_z == b.d_z);
  CHECK(a.share_labels == b.share_labels);
  for (std::size_t t = 0; t < a.markets.size(); ++t) {
    const Market& ma = a.markets[t];
    const Market& mb = b.markets[t];
    CHECK(ma.x1 == mb.x1);
    CHECK(ma.p == mb.p);
    CHECK(ma.xi == mb.xi);
    CHECK(ma.delta == mb.delta);
    CHECK(ma.shares == mb.shares);
    CHECK(ma.x2 == mb.x2);
    CHECK(ma.z == mb.z);
  }
}

}  // namespace

TEST_SUITE_BEGIN("csv_config");

TEST_CASE("doubles survive text formatting exactly") {
  const double awkward[] = {0.0,       -0.0,         1.0 / 3.0,
                            0.1,       -1e-300,      5e-324,
                            1e308,     -2.5,         1234567.89012345678,
                            M_PI,      std::exp(1.0), 0.49999999999999994};
  for (double v : awkward) {
    const std::string s = format_double(v);
    CHECK(same_bits(std::strtod(s.c_str(), nullptr), v));
  }
}

TEST_CASE("bundle panel csv round trip is exact") {
  const MarketPanel panel = small_bundle_panel();
  std::stringstream ss;
  write_panel_csv(ss, panel);
  check_panels_equal(panel, read_panel_csv(ss));
}

TEST_CASE("multinomial panel csv round trip is exact") {
  const MarketPanel panel = small_logit_panel();
  std::stringstream ss;
  write_panel_csv(ss, panel);
  check_panels_equal(panel, read_panel_csv(ss));
}

TEST_CASE("panel csv rejects malformed input") {
  const MarketPanel panel = small_bundle_panel();
  std::stringstream ss;
  write_panel_csv(ss, panel);
  const std::string good = ss.str();

  SUBCASE("missing column") {
    std::string bad = good;
    bad.replace(bad.find("xi"), 2, "qq");
    std::istringstream is(bad);
    check_throws_containing([&] { read_panel_csv(is); }, "xi");
  }
  SUBCASE("non-numeric field") {
    std::string bad = good;
    bad.replace(bad.find('\n') + 5, 1, "y");
    std::istringstream is(bad);
    check_throws_containing([&] { read_panel_csv(is); }, "cannot parse");
  }
  SUBCASE("market ids must be consecutive") {
    std::string bad = good;
    bad.replace(bad.find("\n2,"), 3, "\n7,");
    std::istringstream is(bad);
    check_throws_containing([&] { read_panel_csv(is); }, "consecutive");
  }
  SUBCASE("shares must repeat within a market") {
    // Flip the last digit of the final share field of the file.
    std::string bad = good;
    const std::size_t last = bad.find_last_not_of('\n');
    bad[last] = bad[last] == '1' ? '2' : '1';
    std::istringstream is(bad);
    check_throws_containing([&] { read_panel_csv(is); }, "repeat");
  }
}

TEST_CASE("sinogram csv round trip is exact") {
  const auto density = CoefficientDensity::gaussian(
      (Eigen::VectorXd(2) << 0.3, -0.2).finished(),
      (Eigen::MatrixXd(2, 2) << 0.5, 0.1, 0.1, 0.4).finished());
  // Dyadic offset step so the lattice reconstructs bit-for-bit.
  const SphereGrid grid = SphereGrid::uniform_circle(6, -2.0, 2.0, 17);
  const Sinogram sino = exact_sinogram(density, grid);
  REQUIRE(sino.has_dphi());

  std::stringstream ss;
  write_sinogram_csv(ss, sino);
  const Sinogram back = read_sinogram_csv(ss);
  CHECK(back.grid.q == sino.grid.q);
  CHECK(back.grid.u_min == sino.grid.u_min);
  CHECK(back.grid.u_max == sino.grid.u_max);
  REQUIRE(back.grid.n_directions() == sino.grid.n_directions());
  for (int d = 0; d < sino.grid.n_directions(); ++d)
    CHECK(back.grid.directions[d] == sino.grid.directions[d]);
  CHECK(back.phi == sino.phi);
  REQUIRE(back.has_dphi());
  CHECK(back.dphi == sino.dphi);
}

TEST_CASE("sinogram csv keeps an absent derivative absent") {
  const auto density = CoefficientDensity::gaussian(
      Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  Sinogram sino = exact_sinogram(
      density, SphereGrid::uniform_circle(4, -1.0, 1.0, 9));
  sino.dphi.resize(0, 0);
  std::stringstream ss;
  write_sinogram_csv(ss, sino);
  CHECK(ss.str().find("nan") != std::string::npos);
  const Sinogram back = read_sinogram_csv(ss);
  CHECK(!back.has_dphi());
  CHECK(back.phi == sino.phi);
}

TEST_CASE("grid csv round trip is exact") {
  DensityGrid grid({{-1.5, 2.5, 5}, {0.0, 1.0, 7}});
  for (std::int64_t i = 0; i < grid.size(); ++i)
    grid[i] = std::sin(0.7 * static_cast<double>(i)) * 1e-3 +
              (i % 3 == 0 ? -1e-12 : 0.25);
  std::stringstream ss;
  write_grid_csv(ss, grid);
  const DensityGrid back = read_grid_csv(ss);
  REQUIRE(back.dim() == 2);
  for (int d = 0; d < 2; ++d) {
    CHECK(back.axis(d).lo == grid.axis(d).lo);
    CHECK(back.axis(d).hi == grid.axis(d).hi);
    CHECK(back.axis(d).n == grid.axis(d).n);
  }
  CHECK(back.values() == grid.values());

  SUBCASE("value count mismatch is rejected") {
    std::string bad = ss.str();
    bad.erase(bad.rfind('\n', bad.size() - 2) + 1);
    std::istringstream is(bad);
    check_throws_containing([&] { read_grid_csv(is); }, "values");
  }
}

TEST_CASE("config parses sections comments and lists") {
  const RunConfig cfg = RunConfig::from_string(
      "# top comment\n"
      "threads = 2\n"
      "[model]\n"
      "kind = blp   ; trailing comment\n"
      "sigma_eps = 1.0\n"
      "n_goods=3\n"
      "[density]\n"
      "mean = 1.0, -0.5\n"
      "halton = true\n"
      "seed = 961748927\n");
  CHECK(cfg.get_int("threads") == 2);
  CHECK(cfg.get_string("model.kind") == "blp");
  CHECK(cfg.get_double("model.sigma_eps") == 1.0);
  CHECK(cfg.get_int("model.n_goods") == 3);
  const auto mean = cfg.get_doubles("density.mean");
  REQUIRE(mean.size() == 2);
  CHECK(mean[0] == 1.0);
  CHECK(mean[1] == -0.5);
  CHECK(cfg.get_bool("density.halton"));
  CHECK(cfg.get_seed("density.seed") == 961748927ull);
  CHECK(cfg.get_double("absent", 0.25) == 0.25);
  CHECK(cfg.get_string("absent", "fb") == "fb");
  CHECK_NOTHROW(cfg.reject_unknown());
}

TEST_CASE("config rejects malformed input") {
  check_throws_containing([] { RunConfig::from_string("novalue\n"); },
                          "key=value");
  check_throws_containing([] { RunConfig::from_string("[sec\nk = 1\n"); },
                          "section");
  check_throws_containing([] { RunConfig::from_string("a = 1\na = 2\n"); },
                          "duplicate");
  check_throws_containing(
      [] { RunConfig::from_string("bad key = 1\n"); }, "invalid key");

  const RunConfig cfg = RunConfig::from_string("[m]\nx = a\ny = 1\n");
  check_throws_containing([&] { cfg.get_double("m.x"); }, "m.x");
  check_throws_containing([&] { cfg.get_bool("m.x"); }, "boolean");
  check_throws_containing([&] { cfg.get_double("m.missing"); }, "m.missing");
}

TEST_CASE("config names unknown keys") {
  const RunConfig cfg =
      RunConfig::from_string("[model]\nkind = pcm\nsgima_eps = 0\n");
  CHECK(cfg.get_string("model.kind") == "pcm");
  check_throws_containing([&] { cfg.reject_unknown(); }, "sgima_eps");
}

TEST_SUITE_END();
