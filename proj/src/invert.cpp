// rcdemand — market-level demand from heterogeneous random-coefficient
// discrete-choice models: simulation, share inversion, density recovery.
//
// Share-equation solvers.  The multinomial path runs the log-share fixed
// point (a contraction under extreme-value taste shocks) and finishes with
// damped Newton; the 2x2 bundle / multi-unit subsystems use damped Newton
// throughout with the Jacobian sign asserted at every accepted iterate.

#include "rcdemand/invert.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "rcdemand/demand.hpp"

namespace rcd {

namespace {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

constexpr double kFdScale = 1e-5;       // Jacobian step 1e-5 * (1 + |delta|)
constexpr int kMaxHalvings = 30;        // step damping budget per iterate
constexpr double kContractionExit = 1e-4;  // hand off to Newton below this
constexpr double kMaxStep = 2.0;        // per-iterate cap on |step|_inf
// Below this max-abs Jacobian entry the shares are saturated and finite
// differences carry no sign information; treat the system as singular.
constexpr double kFlatJacobian = 1e-6;

// Damped Newton on r(delta) = 0 with central-difference Jacobians.  `state`
// carries the start point and the iteration count consumed so far (by the
// contraction phase, if any); its contraction history is preserved in both
// the returned result and any InversionError payload.
InversionResult damped_newton(const ResidualFn& resid, InversionResult state,
                              double tol, int max_iter,
                              bool det_negative_required) {
  const int n = static_cast<int>(state.delta.size());
  Eigen::VectorXd r = resid(state.delta);
  double rn = r.lpNorm<Eigen::Infinity>();
  state.residual_norm = rn;
  InversionResult best = state;
  while (rn > tol) {
    if (state.iterations >= max_iter)
      throw InversionError(
          "share inversion did not converge within the iteration cap", best);
    Eigen::MatrixXd jac(n, n);
    for (int j = 0; j < n; ++j) {
      const double h = kFdScale * (1.0 + std::abs(state.delta[j]));
      Eigen::VectorXd dp = state.delta;
      Eigen::VectorXd dm = state.delta;
      dp[j] += h;
      dm[j] -= h;
      jac.col(j) = (resid(dp) - resid(dm)) / (2.0 * h);
    }
    const double jscale = jac.cwiseAbs().maxCoeff();
    const double det = jac.determinant();
    if (jscale < kFlatJacobian ||
        std::abs(det) < kFlatJacobian * std::pow(jscale, n))
      throw InversionError(
          "share Jacobian is numerically degenerate (shares saturated; "
          "target may be infeasible for this menu)",
          best);
    if (det_negative_required)
      require_numerical(
          det < 0.0,
          "share subsystem Jacobian violates the expected sign pattern "
          "(determinant must be negative): the menu lacks the monotone "
          "substitution structure");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible())
      throw InversionError("share Jacobian is numerically singular", best);
    Eigen::VectorXd step = lu.solve(-r);
    const double step_norm = step.lpNorm<Eigen::Infinity>();
    if (step_norm > kMaxStep) step *= kMaxStep / step_norm;
    double lambda = 1.0;
    bool improved = false;
    for (int halving = 0; halving <= kMaxHalvings; ++halving) {
      Eigen::VectorXd cand = state.delta + lambda * step;
      Eigen::VectorXd rc = resid(cand);
      const double rcn = rc.lpNorm<Eigen::Infinity>();
      if (rcn < rn) {
        state.delta = std::move(cand);
        r = std::move(rc);
        rn = rcn;
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    ++state.iterations;
    state.residual_norm = rn;
    if (rn < best.residual_norm) best = state;
    if (!improved)
      throw InversionError(
          "step damping failed to reduce the share residual "
          "(target shares may be infeasible for this menu)",
          best);
  }
  return state;
}

int label_index(const std::vector<std::string>& labels,
                const std::string& label) {
  for (int k = 0; k < static_cast<int>(labels.size()); ++k)
    if (labels[k] == label) return k;
  throw_config("unknown alternative label '" + label + "'");
}

// Shared driver for the 2x2 bundle / multi-unit subsystems.  Rows are put in
// the canonical order that makes the Jacobian determinant negative for a
// monotone menu: ("00","01") as given, ("10","11") flipped to ("11","10"),
// ("20","21") flipped to ("21","20").
InversionResult invert_pair(const ModelSpec& spec,
                            const CoefficientDensity& density,
                            const Eigen::MatrixXd& x2, const Eigen::VectorXd& p,
                            const Eigen::Vector2d& target,
                            const std::array<std::string, 2>& which, double tol,
                            int max_iter, const ShareMapOptions& opts) {
  spec.validate();
  require_config(spec.sigma_eps == 1.0 &&
                     spec.eps.family == EpsSpec::Family::normal,
                 "pair-subsystem inversion runs on smoothed shares and "
                 "requires normal taste shocks with sigma_eps = 1");
  require_config(opts.n_draws >= 1, "inversion: n_draws must be >= 1");
  if (spec.menu == MenuKind::multiunit2)
    for (const std::string& label : which)
      require_config(
          label != "10" && label != "11",
          "subsystems containing alternative 10 or 11 are not monotone in "
          "the vertical indices and cannot be inverted; use {00,01} or "
          "{20,21}");
  for (int i = 0; i < 2; ++i)
    require_config(target[i] > 0.0 && target[i] < 1.0,
                   "target shares must lie strictly inside (0,1)");

  // Canonical row labels per admissible subsystem.
  std::array<std::string, 2> rows;
  auto contains = [&](const std::string& label) {
    return which[0] == label || which[1] == label;
  };
  require_config(which[0] != which[1],
                 "subsystem must name two distinct alternatives");
  if (contains("00") && contains("01"))
    rows = {"00", "01"};
  else if (contains("10") && contains("11"))
    rows = {"11", "10"};
  else if (contains("20") && contains("21"))
    rows = {"21", "20"};
  else
    throw_config("unsupported subsystem {" + which[0] + "," + which[1] +
                 "}: expected {00,01}, {10,11} or {20,21}");

  const std::vector<std::string> labels = spec.alternative_labels();
  std::array<int, 2> alt{};
  Eigen::Vector2d t;
  for (int i = 0; i < 2; ++i) {
    alt[i] = label_index(labels, rows[i]);
    t[i] = rows[i] == which[0] ? target[0] : target[1];
  }

  ProductMenu menu;
  menu.x2 = x2;
  menu.p = p;
  menu.delta = Eigen::VectorXd::Zero(2);
  menu.validate(spec);

  auto resid = [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
    menu.delta = d;
    Eigen::VectorXd s = aggregate_shares_smoothed(spec, density, menu,
                                                  opts.n_draws, opts.seed,
                                                  opts.halton);
    Eigen::VectorXd out(2);
    out << s[alt[0]] - t[0], s[alt[1]] - t[1];
    return out;
  };

  InversionResult state;
  state.delta = Eigen::VectorXd::Zero(2);
  return damped_newton(resid, std::move(state), tol, max_iter, true);
}

}  // namespace

InversionResult invert_multinomial(const ModelSpec& spec,
                                   const CoefficientDensity& density,
                                   const Eigen::MatrixXd& x2,
                                   const Eigen::VectorXd& p,
                                   const Eigen::VectorXd& target_shares,
                                   double tol, int max_iter,
                                   const ShareMapOptions& opts) {
  spec.validate();
  require_config(spec.menu == MenuKind::multinomial,
                 "invert_multinomial requires a multinomial menu");
  require_config(opts.n_draws >= 1, "inversion: n_draws must be >= 1");
  const int J = spec.n_goods;
  require_config(static_cast<int>(target_shares.size()) == J,
                 "invert_multinomial: need one target share per inside good");
  for (int j = 0; j < J; ++j)
    require_config(target_shares[j] > 0.0 && target_shares[j] < 1.0,
                   "target inside-good shares must lie strictly inside (0,1); "
                   "a zero share is outside the identified range");
  require_config(target_shares.sum() < 1.0,
                 "target inside-good shares must sum below 1");

  ProductMenu menu;
  menu.x2 = x2;
  menu.p = p;
  menu.delta = Eigen::VectorXd::Zero(J);
  menu.validate(spec);

  auto inside = [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
    menu.delta = d;
    return aggregate_shares_smoothed(spec, density, menu, opts.n_draws,
                                     opts.seed, opts.halton)
        .tail(J);
  };

  InversionResult state;
  state.delta = Eigen::VectorXd::Zero(J);

  if (spec.sigma_eps == 1.0) {
    // Log-share fixed point; contracts under extreme-value shocks.
    const Eigen::VectorXd log_target = target_shares.array().log().matrix();
    double prev = std::numeric_limits<double>::infinity();
    while (state.iterations < max_iter) {
      const Eigen::VectorXd s = inside(state.delta);
      const Eigen::VectorXd rlog =
          log_target - s.array().log().matrix();
      const double rlogn = rlog.lpNorm<Eigen::Infinity>();
      state.contraction_residuals.push_back(rlogn);
      if (rlogn <= kContractionExit || rlogn >= prev) break;
      state.delta += rlog;
      prev = rlogn;
      ++state.iterations;
    }
  }

  auto resid = [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
    return inside(d) - target_shares;
  };
  return damped_newton(resid, std::move(state), tol, max_iter, false);
}

InversionResult invert_bundles(const ModelSpec& spec,
                               const CoefficientDensity& density,
                               const Eigen::MatrixXd& x2,
                               const Eigen::VectorXd& p,
                               const Eigen::Vector2d& target,
                               const std::array<std::string, 2>& which,
                               double tol, int max_iter,
                               const ShareMapOptions& opts) {
  require_config(spec.menu == MenuKind::bundles2,
                 "invert_bundles requires a two-good bundle menu");
  return invert_pair(spec, density, x2, p, target, which, tol, max_iter, opts);
}

InversionResult invert_multiunit(const ModelSpec& spec,
                                 const CoefficientDensity& density,
                                 const Eigen::MatrixXd& x2,
                                 const Eigen::VectorXd& p,
                                 const Eigen::Vector2d& target,
                                 const std::array<std::string, 2>& which,
                                 double tol, int max_iter,
                                 const ShareMapOptions& opts) {
  require_config(spec.menu == MenuKind::multiunit2,
                 "invert_multiunit requires a two-good multi-unit menu");
  return invert_pair(spec, density, x2, p, target, which, tol, max_iter, opts);
}

Eigen::VectorXd recover_xi(const Eigen::VectorXd& delta,
                           const Eigen::VectorXd& x1) {
  require_config(delta.size() == x1.size(),
                 "recover_xi: delta and x1 must have equal length");
  return delta - x1;
}

}  // namespace rcd
