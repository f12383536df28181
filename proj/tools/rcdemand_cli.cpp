// rcdemand command-line driver: reproducible pipelines over the library.
//
//   rcdemand <command> <config-file>
//
// Commands: simulate, invert, phi, fbp, deconv, estimate.  The config file
// is flat key=value text with INI-style sections (see README).  Every
// command is a pure function of (config, input files): re-running writes
// byte-identical outputs.  A machine-readable JSON report goes to stdout;
// errors emit a JSON object on stderr.  Exit codes: 0 success, 1 numerical
// failure, 2 configuration or schema error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "rcdemand/config.hpp"
#include "rcdemand/csvio.hpp"
#include "rcdemand/deconv.hpp"
#include "rcdemand/demand.hpp"
#include "rcdemand/fbp.hpp"
#include "rcdemand/gmm.hpp"
#include "rcdemand/invert.hpp"
#include "rcdemand/npiv.hpp"
#include "rcdemand/panel.hpp"
#include "rcdemand/phi.hpp"
#include "rcdemand/radon.hpp"

using json = nlohmann::json;
using namespace rcd;

namespace {

// ---------------------------------------------------------------------------
// Config -> domain objects

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

Eigen::MatrixXd to_matrix(const std::vector<double>& v, int rows, int cols,
                          const std::string& key) {
  require_config(static_cast<int>(v.size()) == rows * cols,
                 "config: key '" + key + "' needs " +
                     std::to_string(rows * cols) + " entries (" +
                     std::to_string(rows) + "x" + std::to_string(cols) + ")");
  Eigen::MatrixXd out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = v[r * cols + c];
  return out;
}

ModelSpec parse_model(const RunConfig& cfg) {
  ModelSpec spec;
  const std::string menu = cfg.get_string("model.menu", "multinomial");
  if (menu == "multinomial")
    spec.menu = MenuKind::multinomial;
  else if (menu == "bundles")
    spec.menu = MenuKind::bundles2;
  else if (menu == "multiunit")
    spec.menu = MenuKind::multiunit2;
  else
    throw_config("config: model.menu must be multinomial, bundles, or "
                 "multiunit, got '" + menu + "'");
  spec.n_goods = static_cast<int>(
      cfg.get_int("model.n_goods", spec.menu == MenuKind::multinomial ? 1 : 2));
  spec.d_x = static_cast<int>(cfg.get_int("model.d_x", 2));
  spec.sigma_eps = cfg.get_double("model.sigma_eps", 1.0);
  const std::string eps_default =
      (spec.menu == MenuKind::multinomial && spec.sigma_eps == 1.0) ? "gumbel"
                                                                    : "normal";
  const std::string eps = cfg.get_string("model.eps", eps_default);
  if (eps == "gumbel") {
    spec.eps = EpsSpec::gumbel();
  } else if (eps == "normal") {
    if (cfg.has("model.eps_cov"))
      spec.eps = EpsSpec::normal(to_matrix(cfg.get_doubles("model.eps_cov"),
                                           spec.n_goods, spec.n_goods,
                                           "model.eps_cov"));
    else
      spec.eps = EpsSpec::normal_iid(spec.n_goods);
  } else {
    throw_config("config: model.eps must be gumbel or normal, got '" + eps +
                 "'");
  }
  spec.validate();
  return spec;
}

CoefficientDensity parse_parametric_density(const RunConfig& cfg,
                                            const std::string& section) {
  auto key = [&](const std::string& k) { return section + "." + k; };
  const std::string kind = cfg.get_string(key("kind"), "gaussian");
  auto cov_of = [&](const std::string& prefix, int d) {
    if (cfg.has(key(prefix + "cov")))
      return to_matrix(cfg.get_doubles(key(prefix + "cov")), d, d,
                       key(prefix + "cov"));
    const auto sd = cfg.get_doubles(key(prefix + "sd"));
    require_config(static_cast<int>(sd.size()) == d,
                   "config: key '" + key(prefix + "sd") + "' needs " +
                       std::to_string(d) + " entries");
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) cov(i, i) = sd[i] * sd[i];
    return cov;
  };
  if (kind == "point_mass")
    return CoefficientDensity::point_mass(
        to_vector(cfg.get_doubles(key("mean"))));
  if (kind == "gaussian") {
    const Eigen::VectorXd mean = to_vector(cfg.get_doubles(key("mean")));
    return CoefficientDensity::gaussian(
        mean, cov_of("", static_cast<int>(mean.size())));
  }
  if (kind == "mixture") {
    const int n = static_cast<int>(cfg.get_int(key("components")));
    require_config(n >= 1, "config: " + key("components") + " must be >= 1");
    std::vector<double> weights;
    std::vector<CoefficientDensity> comps;
    for (int c = 1; c <= n; ++c) {
      const std::string p = "comp" + std::to_string(c) + "_";
      weights.push_back(cfg.get_double(key(p + "weight")));
      const Eigen::VectorXd mean = to_vector(cfg.get_doubles(key(p + "mean")));
      comps.push_back(CoefficientDensity::gaussian(
          mean, cov_of(p, static_cast<int>(mean.size()))));
    }
    return CoefficientDensity::mixture(weights, comps);
  }
  throw_config("config: " + key("kind") +
               " must be point_mass, gaussian, or mixture, got '" + kind +
               "'");
}

// A density that is either a parametric section or a 1-d grid file named by
// input.<file_key>.
CoefficientDensity parse_density_or_file(const RunConfig& cfg,
                                         const std::string& section,
                                         const std::string& file_key) {
  if (cfg.has("input." + file_key)) {
    const DensityGrid g = read_grid_csv(cfg.get_string("input." + file_key));
    return CoefficientDensity::from_grid(g);
  }
  return parse_parametric_density(cfg, section);
}

PanelDgp parse_dgp(const RunConfig& cfg) {
  PanelDgp d;
  d.x1_mean = cfg.get_double("panel.x1_mean", d.x1_mean);
  d.x1_sd = cfg.get_double("panel.x1_sd", d.x1_sd);
  d.x2_lo = cfg.get_double("panel.x2_lo", d.x2_lo);
  d.x2_hi = cfg.get_double("panel.x2_hi", d.x2_hi);
  d.z_sd = cfg.get_double("panel.z_sd", d.z_sd);
  d.d_z = static_cast<int>(cfg.get_int("panel.d_z", d.d_z));
  d.xi_sd = cfg.get_double("panel.xi_sd", d.xi_sd);
  d.rho = cfg.get_double("panel.rho", d.rho);
  d.pi = cfg.get_double("panel.pi", d.pi);
  d.price_base = cfg.get_double("panel.price_base", d.price_base);
  d.price_noise_sd = cfg.get_double("panel.price_noise_sd", d.price_noise_sd);
  d.share_draws = static_cast<int>(
      cfg.get_int("panel.share_draws", d.share_draws));
  d.halton = cfg.get_bool("panel.halton", d.halton);
  return d;
}

GridAxis parse_axis(const RunConfig& cfg, const std::string& key) {
  const auto v = cfg.get_doubles(key);
  require_config(v.size() == 3,
                 "config: key '" + key + "' must be lo,hi,n");
  GridAxis ax;
  ax.lo = v[0];
  ax.hi = v[1];
  ax.n = static_cast<int>(v[2]);
  require_config(ax.n >= 2 && ax.lo < ax.hi,
                 "config: key '" + key + "' must satisfy lo < hi and n >= 2");
  return ax;
}

std::ofstream open_text(const std::string& path) {
  std::ofstream os(path);
  require_config(os.good(), "cli: cannot open '" + path + "' for writing");
  return os;
}

// ---------------------------------------------------------------------------
// Commands

json cmd_simulate(const RunConfig& cfg) {
  const ModelSpec spec = parse_model(cfg);
  const CoefficientDensity density = parse_parametric_density(cfg, "density");
  const PanelDgp dgp = parse_dgp(cfg);
  const int T = static_cast<int>(cfg.get_int("panel.markets"));
  const std::uint64_t seed = cfg.get_seed("panel.seed", 1);
  const std::string path = cfg.get_string("output.panel");
  cfg.reject_unknown();

  const MarketPanel panel = generate_panel(spec, density, T, dgp, seed);
  write_panel_csv(path, panel);
  return json{{"command", "simulate"},
              {"markets", T},
              {"goods", panel.n_goods},
              {"share_labels", panel.share_labels},
              {"panel", path}};
}

json cmd_invert(const RunConfig& cfg) {
  const MarketPanel panel = read_panel_csv(cfg.get_string("input.panel"));
  const ModelSpec spec = parse_model(cfg);
  require_config(spec.menu == panel.menu && spec.n_goods == panel.n_goods &&
                     spec.d_x == panel.d_x,
                 "cli: [model] disagrees with the panel file's menu shape");
  const CoefficientDensity density = parse_parametric_density(cfg, "density");

  ShareMapOptions opt;
  opt.n_draws = static_cast<int>(cfg.get_int(
      "invert.n_draws", cfg.get_int("panel.share_draws", opt.n_draws)));
  opt.seed = cfg.get_seed("invert.seed", opt.seed);
  opt.halton = cfg.get_bool("invert.halton", cfg.get_bool("panel.halton", true));
  const double tol = cfg.get_double("invert.tol", 1e-8);
  const int max_iter = static_cast<int>(cfg.get_int("invert.max_iter", 200));
  std::array<std::string, 2> which{"00", "01"};
  if (cfg.has("invert.subsystem")) {
    const auto w = cfg.get_strings("invert.subsystem");
    require_config(w.size() == 2,
                   "config: invert.subsystem must name two labels");
    which = {w[0], w[1]};
  }
  const std::string out_path = cfg.get_string("output.delta");

  double max_err = 0.0, max_resid = 0.0;
  int total_iter = 0;
  auto os = open_text(out_path);
  os << "t,j,delta_hat,xi_hat\n";
  for (std::size_t t = 0; t < panel.markets.size(); ++t) {
    const Market& m = panel.markets[t];
    InversionResult res;
    if (panel.menu == MenuKind::multinomial) {
      Eigen::VectorXd target(panel.n_goods);
      for (int j = 0; j < panel.n_goods; ++j) target[j] = m.shares[j + 1];
      res = invert_multinomial(spec, density, m.x2, m.p, target, tol,
                               max_iter, opt);
    } else {
      auto label_at = [&](const std::string& lab) {
        for (std::size_t k = 0; k < panel.share_labels.size(); ++k)
          if (panel.share_labels[k] == lab) return m.shares[k];
        throw_config("cli: subsystem label '" + lab + "' not in the panel");
      };
      const Eigen::Vector2d target(label_at(which[0]), label_at(which[1]));
      res = panel.menu == MenuKind::bundles2
                ? invert_bundles(spec, density, m.x2, m.p, target, which, tol,
                                 max_iter, opt)
                : invert_multiunit(spec, density, m.x2, m.p, target, which,
                                   tol, max_iter, opt);
    }
    for (int j = 0; j < panel.n_goods; ++j) {
      os << t << "," << j << "," << format_double(res.delta[j]) << ","
         << format_double(res.delta[j] - m.x1[j]) << "\n";
      max_err = std::max(max_err, std::abs(res.delta[j] - m.delta[j]));
    }
    max_resid = std::max(max_resid, res.residual_norm);
    total_iter += res.iterations;
  }
  cfg.reject_unknown();
  return json{{"command", "invert"},
              {"markets", panel.markets.size()},
              {"max_delta_error", max_err},
              {"max_share_residual", max_resid},
              {"total_iterations", total_iter},
              {"delta", out_path}};
}

json cmd_phi(const RunConfig& cfg) {
  const ModelSpec spec = parse_model(cfg);
  const CoefficientDensity density = parse_parametric_density(cfg, "density");

  static const std::map<std::string, PhiStrategy> strategies{
      {"pcm", PhiStrategy::pcm},         {"blp", PhiStrategy::blp},
      {"bundle00", PhiStrategy::bundle00}, {"bundle11", PhiStrategy::bundle11},
      {"multi00", PhiStrategy::multi00}, {"multi01", PhiStrategy::multi01},
      {"multi20", PhiStrategy::multi20}, {"multi21", PhiStrategy::multi21}};
  const std::string sname = cfg.get_string("phi.strategy");
  const auto sit = strategies.find(sname);
  require_config(sit != strategies.end(),
                 "config: phi.strategy '" + sname + "' is not a strategy");
  const PhiStrategy strategy = sit->second;
  const int j = static_cast<int>(cfg.get_int("phi.j", 0));

  PhiOptions opts;
  opts.n_draws = static_cast<int>(cfg.get_int("phi.n_draws", opts.n_draws));
  opts.seed = cfg.get_seed("phi.seed", opts.seed);
  opts.truncation = cfg.get_double("phi.truncation", opts.truncation);
  opts.bias_budget = cfg.get_double("phi.bias_budget", opts.bias_budget);

  ProductMenu menu;
  menu.x2 = cfg.has("phi.menu_x2")
                ? to_matrix(cfg.get_doubles("phi.menu_x2"), spec.n_goods,
                            spec.d_x - 1, "phi.menu_x2")
                : Eigen::MatrixXd::Zero(spec.n_goods, spec.d_x - 1);
  menu.p = cfg.has("phi.menu_p")
               ? to_vector(cfg.get_doubles("phi.menu_p"))
               : Eigen::VectorXd::Zero(spec.n_goods);
  menu.delta = cfg.has("phi.menu_delta")
                   ? to_vector(cfg.get_doubles("phi.menu_delta"))
                   : Eigen::VectorXd::Zero(spec.n_goods);

  const int q = strategy == PhiStrategy::pcm ? spec.d_x : spec.d_x + 1;
  const double u_min = cfg.get_double("sinogram.u_min", -4.0);
  const double u_max = cfg.get_double("sinogram.u_max", 4.0);
  const int n_off = static_cast<int>(cfg.get_int("sinogram.n_offsets", 129));
  SphereGrid grid;
  if (q == 2)
    grid = SphereGrid::uniform_circle(
        static_cast<int>(cfg.get_int("sinogram.n_dir", 64)), u_min, u_max,
        n_off);
  else if (q == 3)
    grid = SphereGrid::fibonacci_hemisphere(
        static_cast<int>(cfg.get_int("sinogram.n_sphere", 2048)), u_min,
        u_max, n_off);
  else
    throw_config("cli: phi strategies need a 2-d or 3-d coefficient slot; "
                 "got dimension " + std::to_string(q));

  const std::string out_path = cfg.get_string("output.sinogram");
  const bool differentiate = cfg.get_bool("phi.differentiate", true);
  cfg.reject_unknown();

  std::vector<std::string> violations;
  Sinogram sino =
      assemble_sinogram(spec, density, strategy, j, menu, grid, opts,
                        &violations);
  if (differentiate) sino = differentiate_offset(std::move(sino));
  write_sinogram_csv(out_path, sino);

  json rep{{"command", "phi"},
           {"strategy", sname},
           {"directions", sino.grid.n_directions()},
           {"offsets", sino.grid.n_offsets},
           {"violations", violations.size()},
           {"sinogram", out_path}};
  if (!violations.empty()) rep["first_violation"] = violations.front();
  return rep;
}

json cmd_fbp(const RunConfig& cfg) {
  const Sinogram sino = read_sinogram_csv(cfg.get_string("input.sinogram"));
  std::vector<GridAxis> axes;
  for (int d = 1; d <= sino.grid.q; ++d)
    axes.push_back(parse_axis(cfg, "grid.axis" + std::to_string(d)));
  FbpOptions opts;
  opts.r = cfg.get_double("fbp.r", 0.0);
  opts.clip_negative = cfg.get_bool("fbp.clip", true);
  const std::string out_path = cfg.get_string("output.density");
  const std::string plot_path = cfg.get_string("output.plot", "");
  cfg.reject_unknown();

  FbpReport report;
  const DensityGrid grid = fbp_invert(sino, axes, opts, &report);
  write_grid_csv(out_path, grid);
  if (!plot_path.empty()) {
    auto os = open_text(plot_path);
    for (int d = 1; d <= grid.dim(); ++d) os << "x_" << d << ",";
    os << "value\n";
    std::vector<double> x(grid.dim());
    for (std::int64_t i = 0; i < grid.size(); ++i) {
      grid.node(i, x.data());
      for (double c : x) os << format_double(c) << ",";
      os << format_double(grid[i]) << "\n";
    }
  }
  return json{{"command", "fbp"},
              {"mass", grid.mass()},
              {"raw_mass", report.raw_mass},
              {"negative_mass", report.negative_mass},
              {"bandwidth", report.r},
              {"density", out_path}};
}

json cmd_deconv(const RunConfig& cfg) {
  const CoefficientDensity sum_density =
      parse_density_or_file(cfg, "sum", "sum_density");
  const CoefficientDensity noise_density =
      parse_density_or_file(cfg, "noise", "noise_density");
  const double t_lim = cfg.get_double("deconv.t_lim", 40.0);
  const int n_freq = static_cast<int>(cfg.get_int("deconv.n_freq", 4096));
  DeconvolveOptions opts;
  opts.cutoff_rel = cfg.get_double("deconv.cutoff_rel", opts.cutoff_rel);
  const GridAxis axis = parse_axis(cfg, "grid.axis");
  const std::string out_path = cfg.get_string("output.density");
  const std::string plot_path = cfg.get_string("output.plot", "");
  cfg.reject_unknown();

  const CharacteristicFunction psi_sum =
      cf_from_density(sum_density, t_lim, n_freq);
  const CharacteristicFunction psi_noise =
      cf_from_density(noise_density, t_lim, n_freq);
  const DensityGrid grid = deconvolve(psi_sum, psi_noise, axis, opts);
  write_grid_csv(out_path, grid);
  if (!plot_path.empty()) {
    auto os = open_text(plot_path);
    os << "x,value\n";
    for (std::int64_t i = 0; i < grid.size(); ++i)
      os << format_double(grid.axis(0).node(static_cast<int>(i))) << ","
         << format_double(grid[i]) << "\n";
  }
  return json{{"command", "deconv"},
              {"mass", grid.mass()},
              {"n_freq", n_freq},
              {"cutoff_rel", opts.cutoff_rel},
              {"density", out_path}};
}

json start_report_json(const GmmStartReport& r) {
  json j{{"start", std::vector<double>(r.start.begin(), r.start.end())},
         {"best", std::vector<double>(r.best.begin(), r.best.end())},
         {"q", r.q},
         {"evaluations", r.evaluations},
         {"inversion_failures", r.inversion_failures},
         {"converged", r.converged}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

json cmd_estimate_gmm(const RunConfig& cfg, const MarketPanel& panel) {
  GmmSpec gs;
  gs.lower = to_vector(cfg.get_doubles("gmm.lower"));
  gs.upper = to_vector(cfg.get_doubles("gmm.upper"));
  gs.beta2 = cfg.get_double("gmm.beta2", gs.beta2);
  gs.n_s = static_cast<int>(cfg.get_int("gmm.n_s", gs.n_s));
  gs.seed = cfg.get_seed("gmm.seed", gs.seed);
  gs.halton = cfg.get_bool("gmm.halton", gs.halton);
  if (cfg.has("gmm.instruments"))
    gs.instruments = cfg.get_strings("gmm.instruments");
  const std::string weight = cfg.get_string("gmm.weight", "identity");
  if (weight == "two_step")
    gs.weight = GmmSpec::Weight::two_step;
  else
    require_config(weight == "identity",
                   "config: gmm.weight must be identity or two_step");
  gs.ridge = cfg.get_double("gmm.ridge", gs.ridge);
  gs.inversion_tol = cfg.get_double("gmm.inversion_tol", gs.inversion_tol);
  gs.inversion_max_iter = static_cast<int>(
      cfg.get_int("gmm.inversion_max_iter", gs.inversion_max_iter));

  OptimOptions opts;
  opts.n_starts = static_cast<int>(cfg.get_int("optim.n_starts", opts.n_starts));
  opts.max_evals = static_cast<int>(cfg.get_int("optim.max_evals", opts.max_evals));
  opts.polish_evals =
      static_cast<int>(cfg.get_int("optim.polish_evals", opts.polish_evals));
  opts.simplex_tol = cfg.get_double("optim.simplex_tol", opts.simplex_tol);
  const std::string report_path = cfg.get_string("output.report", "");
  cfg.reject_unknown();

  const GmmEstimate est = gmm_estimate(gs, panel, opts);
  json rep{{"command", "estimate"},
           {"mode", "gmm"},
           {"markets", panel.markets.size()},
           {"gamma", std::vector<double>(est.gamma.begin(), est.gamma.end())},
           {"q", est.q},
           {"on_boundary", est.on_boundary},
           {"weight", weight}};
  json starts = json::array();
  for (const auto& r : est.starts) starts.push_back(start_report_json(r));
  rep["starts"] = starts;
  if (!report_path.empty()) {
    auto os = open_text(report_path);
    os << rep.dump(2) << "\n";
  }
  return rep;
}

json cmd_estimate_npiv(const RunConfig& cfg, const MarketPanel& panel) {
  const double alpha = cfg.get_double("npiv.alpha");
  const bool monotone = cfg.get_bool("npiv.monotone", false);
  const auto endo_names = cfg.has("npiv.endo")
                              ? cfg.get_strings("npiv.endo")
                              : std::vector<std::string>{"p", "share"};
  const auto inst_names = cfg.has("npiv.inst")
                              ? cfg.get_strings("npiv.inst")
                              : std::vector<std::string>{"z", "x2"};
  const int endo_segments =
      static_cast<int>(cfg.get_int("npiv.endo_segments", 4));
  const int inst_segments =
      static_cast<int>(cfg.get_int("npiv.inst_segments", 6));
  const std::string fitted_path = cfg.get_string("output.fitted", "");
  cfg.reject_unknown();

  // Own-purchase share of good j (marginal over the other good for bundle
  // menus, own alternative for multinomial).
  auto own_share = [&](const Market& m, int j) {
    if (panel.menu == MenuKind::multinomial) return m.shares[j + 1];
    double s = 0.0;
    for (std::size_t k = 0; k < panel.share_labels.size(); ++k) {
      const std::string& lab = panel.share_labels[k];
      if (lab[j] != '0') s += m.shares[static_cast<int>(k)];
    }
    return s;
  };
  auto column_value = [&](const std::string& name, const Market& m, int j,
                          bool endo) -> std::vector<double> {
    if (endo) {
      if (name == "p") return {m.p[j]};
      if (name == "share") return {own_share(m, j)};
      if (name == "x2") {
        std::vector<double> v;
        for (int k = 0; k < panel.d_x - 1; ++k) v.push_back(m.x2(j, k));
        return v;
      }
      throw_config("config: npiv.endo entries must be among p, share, x2");
    }
    if (name == "z") {
      std::vector<double> v;
      for (int k = 0; k < panel.d_z; ++k) v.push_back(m.z(j, k));
      return v;
    }
    if (name == "x1") return {m.x1[j]};
    if (name == "x2") {
      std::vector<double> v;
      for (int k = 0; k < panel.d_x - 1; ++k) v.push_back(m.x2(j, k));
      return v;
    }
    throw_config("config: npiv.inst entries must be among z, x1, x2");
  };

  // Assemble observation matrices: one row per (market, good).
  std::vector<std::vector<double>> endo_rows, inst_rows;
  std::vector<double> response;
  for (const Market& m : panel.markets)
    for (int j = 0; j < panel.n_goods; ++j) {
      std::vector<double> er, ir;
      for (const auto& n : endo_names) {
        const auto v = column_value(n, m, j, true);
        er.insert(er.end(), v.begin(), v.end());
      }
      for (const auto& n : inst_names) {
        const auto v = column_value(n, m, j, false);
        ir.insert(ir.end(), v.begin(), v.end());
      }
      endo_rows.push_back(er);
      inst_rows.push_back(ir);
      response.push_back(m.x1[j]);
    }
  const int n = static_cast<int>(endo_rows.size());
  const int de = static_cast<int>(endo_rows[0].size());
  const int di = static_cast<int>(inst_rows[0].size());
  Eigen::MatrixXd endo(n, de), inst(n, di);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < de; ++c) endo(i, c) = endo_rows[i][c];
    for (int c = 0; c < di; ++c) inst(i, c) = inst_rows[i][c];
  }

  // Spline boxes cover the observed ranges exactly.
  TensorBSpline basis, inst_basis;
  for (int c = 0; c < de; ++c)
    basis.axes.push_back(
        {endo.col(c).minCoeff(), endo.col(c).maxCoeff(), endo_segments});
  for (int c = 0; c < di; ++c)
    inst_basis.axes.push_back(
        {inst.col(c).minCoeff(), inst.col(c).maxCoeff(), inst_segments});

  NpivProblem problem =
      build_npiv_problem(endo, to_vector(response), inst, basis, inst_basis);
  problem.alpha = alpha;
  problem.monotone = monotone;
  problem.tensor_dims = basis.sizes();
  const NpivFit fit = npiv_fit(problem);

  if (!fitted_path.empty()) {
    auto os = open_text(fitted_path);
    os << "t,j,psi_hat,x1\n";
    int row = 0;
    for (std::size_t t = 0; t < panel.markets.size(); ++t)
      for (int j = 0; j < panel.n_goods; ++j, ++row)
        os << t << "," << j << ","
           << format_double(
                  basis.value(fit.coef, endo.row(row).transpose()))
           << "," << format_double(response[row]) << "\n";
  }
  return json{{"command", "estimate"},
              {"mode", "npiv"},
              {"observations", n},
              {"alpha", alpha},
              {"monotone", monotone},
              {"coef_norm", fit.coef.norm()},
              {"residual_norm", fit.residual_norm},
              {"objective", fit.objective},
              {"iterations", fit.iterations}};
}

json cmd_estimate(const RunConfig& cfg) {
  const MarketPanel panel = read_panel_csv(cfg.get_string("input.panel"));
  const std::string mode = cfg.get_string("estimate.mode");
  if (mode == "gmm") return cmd_estimate_gmm(cfg, panel);
  if (mode == "npiv") return cmd_estimate_npiv(cfg, panel);
  throw_config("config: estimate.mode must be gmm or npiv, got '" + mode +
               "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "rcdemand: simulate, invert, and estimate random-coefficient demand"};
  app.require_subcommand(1);
  std::string config_path;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "simulate a market panel and write it as CSV"},
      {"invert", "recover vertical indices from a panel's shares"},
      {"phi", "build a projection-CDF sinogram from simulated demand"},
      {"fbp", "invert a sinogram to a density lattice"},
      {"deconv", "recover a summand density by CF division"},
      {"estimate", "fit gamma by GMM or psi by regularized NPIV"}};
  for (const auto& [name, desc] : commands)
    app.add_subcommand(name, desc)
        ->add_option("config", config_path, "key=value config file")
        ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems are config errors
  }

  try {
    const RunConfig cfg = RunConfig::from_file(config_path);
#ifdef _OPENMP
    const long threads = cfg.get_int("threads", 0);
    if (threads > 0) omp_set_num_threads(static_cast<int>(threads));
#else
    (void)cfg.get_int("threads", 0);
#endif
    const std::string name = app.get_subcommands().front()->get_name();
    json report;
    if (name == "simulate")
      report = cmd_simulate(cfg);
    else if (name == "invert")
      report = cmd_invert(cfg);
    else if (name == "phi")
      report = cmd_phi(cfg);
    else if (name == "fbp")
      report = cmd_fbp(cfg);
    else if (name == "deconv")
      report = cmd_deconv(cfg);
    else
      report = cmd_estimate(cfg);
    std::cout << report.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    const char* kind = e.kind() == ErrorKind::config ? "config" : "numerical";
    std::cerr << json{{"error", {{"kind", kind}, {"message", e.what()}}}}
                     .dump(2)
              << "\n";
    return e.kind() == ErrorKind::config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error",
                       {{"kind", "numerical"}, {"message", e.what()}}}}
                     .dump(2)
              << "\n";
    return 1;
  }
}
