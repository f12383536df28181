// rcdemand — market-level demand from heterogeneous random-coefficient
// discrete-choice models: simulation, share inversion, density recovery.
//
// Share-equation inversion: recover the per-good vertical indices delta from
// observed market shares.  All solvers operate on the smoothed (taste-shock
// integrated) share maps, so finite differences give accurate derivatives.
//
//  - invert_multinomial: full J-vector of inside-good shares.  With additive
//    extreme-value shocks the fixed point delta <- delta + log s* - log s(delta)
//    contracts; a damped Newton polish finishes to tight tolerance.  Without
//    taste shocks (sigma_eps = 0) damped Newton runs from the start.
//  - invert_bundles / invert_multiunit: a 2x2 subsystem of two alternative
//    shares is solved for (delta_1, delta_2) by damped Newton.  The admissible
//    subsystems are monotone in (delta_1, delta_2) with a negative Jacobian
//    determinant once rows are ordered canonically; the solver asserts that
//    sign at every accepted iterate and rejects subsystems without the
//    monotone structure (multi-unit menus: any subsystem containing "10" or
//    "11").
//
// Newton details: start delta = 0, central differences with per-coordinate
// step 1e-5 * (1 + |delta_j|), step halved until the max-norm share residual
// decreases (at most 30 halvings), default tol 1e-8 on the share residual,
// default iteration cap 200.  Non-convergence raises InversionError carrying
// the best iterate found.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rcdemand/common.hpp"
#include "rcdemand/density.hpp"
#include "rcdemand/model.hpp"

namespace rcd {

struct InversionResult {
  Eigen::VectorXd delta;          // recovered vertical indices
  double residual_norm = 0.0;     // max abs share residual at delta
  int iterations = 0;             // contraction + Newton steps taken
  // Max-norm log-share residual per fixed-point iterate; filled only by the
  // multinomial contraction phase.  Non-increasing for extreme-value shocks.
  std::vector<double> contraction_residuals;
};

// Non-convergence (iteration cap, failed damping, singular Jacobian).  The
// best iterate reached is attached for diagnostics and warm restarts.
class InversionError : public Error {
 public:
  InversionError(const std::string& what, InversionResult best)
      : Error(ErrorKind::numerical, what), best_(std::move(best)) {}
  const InversionResult& best() const noexcept { return best_; }

 private:
  InversionResult best_;
};

// Settings for the smoothed share map the solvers invert.  The map is
// deterministic given (n_draws, seed, halton), so a round trip through
// simulated shares with the same settings is exact up to solver tolerance.
struct ShareMapOptions {
  int n_draws = 512;
  std::uint64_t seed = 961748927ull;
  bool halton = false;
};

// Solve s(delta) = target for all J inside goods of a multinomial menu.
// target must be strictly inside (0,1) with sum < 1.
InversionResult invert_multinomial(const ModelSpec& spec,
                                   const CoefficientDensity& density,
                                   const Eigen::MatrixXd& x2,
                                   const Eigen::VectorXd& p,
                                   const Eigen::VectorXd& target_shares,
                                   double tol = 1e-8, int max_iter = 200,
                                   const ShareMapOptions& opts = {});

// Solve the 2x2 bundle subsystem named by `which` (pair of alternative
// labels, {"00","01"} or {"10","11"}) for (delta_1, delta_2).  `target`
// is ordered like `which`.
InversionResult invert_bundles(const ModelSpec& spec,
                               const CoefficientDensity& density,
                               const Eigen::MatrixXd& x2,
                               const Eigen::VectorXd& p,
                               const Eigen::Vector2d& target,
                               const std::array<std::string, 2>& which,
                               double tol = 1e-8, int max_iter = 200,
                               const ShareMapOptions& opts = {});

// Same for the multi-unit menu; admissible subsystems are {"00","01"} and
// {"20","21"} (the middle alternatives "10"/"11" are not monotone in delta
// and are rejected).
InversionResult invert_multiunit(const ModelSpec& spec,
                                 const CoefficientDensity& density,
                                 const Eigen::MatrixXd& x2,
                                 const Eigen::VectorXd& p,
                                 const Eigen::Vector2d& target,
                                 const std::array<std::string, 2>& which,
                                 double tol = 1e-8, int max_iter = 200,
                                 const ShareMapOptions& opts = {});

// Unobserved quality from the recovered index: xi_j = delta_j - x1_j.
Eigen::VectorXd recover_xi(const Eigen::VectorXd& delta,
                           const Eigen::VectorXd& x1);

}  // namespace rcd
