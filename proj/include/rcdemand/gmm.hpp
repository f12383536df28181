// Parametric estimation of the two-good bundle model: simulate shares at a
// candidate parameter, invert the demand subsystems for the vertical indices,
// stack residual-instrument moments, and minimize the quadratic criterion by
// multistart Nelder-Mead.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rcdemand/density.hpp"
#include "rcdemand/panel.hpp"

namespace rcd {

// Settings for the 4-parameter bundle model
// gamma = (mean_alpha, sd_alpha, mean_Delta, sd_Delta): beta2 is a fixed
// scalar coefficient on the taste covariate and the taste shocks are iid
// standard normal.
struct GmmSpec {
  Eigen::VectorXd lower, upper;  // parameter box, length 4
  double beta2 = 1.0;            // fixed coefficient on the taste covariate
  int n_s = 256;                 // simulation draws per share evaluation
  std::uint64_t seed = 1;        // draw stream and optimizer scatter seed
  bool halton = true;            // quasi-random structural draws

  // Inversion pairs: each subsystem names two menu labels whose observed
  // shares are solved jointly for (delta_1, delta_2).
  std::array<std::array<std::string, 2>, 2> subsystems{
      {{"00", "01"}, {"10", "11"}}};

  // Instrument blocks interacted with the three stacked residuals; any of
  // "const", "z", "x2", "x1".
  std::vector<std::string> instruments{"const", "z", "x2"};
  double instrument_scale = 1.0;  // diagnostic rescaling of every instrument

  enum class Weight { identity, two_step };
  Weight weight = Weight::identity;
  double ridge = 1e-8;  // two-step: added to the moment covariance diagonal

  double inversion_tol = 1e-8;
  int inversion_max_iter = 120;

  void validate() const;
};

// gamma -> density over (beta2, alpha, Delta): independent normals with
// beta2 degenerate at spec.beta2, alpha ~ N(g0, g1^2), Delta ~ N(g2, g3^2).
CoefficientDensity bundle_gamma_density(const GmmSpec& spec,
                                        const Eigen::VectorXd& gamma);

struct GmmMoments {
  Eigen::VectorXd g;           // moment vector averaged over markets
  Eigen::MatrixXd per_market;  // n_markets x dim(g) contributions
};

// Simulate shares at gamma with common random numbers, invert both subsystems
// per market, and interact the three non-redundant residuals (the fourth is
// dropped because shares sum to 1) with the instrument blocks.  Deterministic
// in (gamma, spec.seed).  Throws a numerical error naming the market and
// gamma when an inversion fails.
GmmMoments gmm_moments(const Eigen::VectorXd& gamma, const GmmSpec& spec,
                       const MarketPanel& data);

// Q(gamma) = g' W g >= 0 with W per spec.weight: identity, or the inverse of
// the ridged outer-product moment covariance evaluated at this gamma.
double gmm_criterion(const Eigen::VectorXd& gamma, const GmmSpec& spec,
                     const MarketPanel& data);

struct GmmStartReport {
  Eigen::VectorXd start;
  Eigen::VectorXd best;
  double q = 0.0;
  int evaluations = 0;
  int inversion_failures = 0;  // trial points rejected for failed inversions
  bool converged = false;      // simplex collapsed below tolerance
  std::string error;           // nonempty when the start produced no value
};

struct GmmEstimate {
  Eigen::VectorXd gamma;
  double q = 0.0;
  bool on_boundary = false;  // a component of gamma sits on the box edge
  std::vector<GmmStartReport> starts;
  Eigen::MatrixXd weight;  // W behind the reported q
};

struct OptimOptions {
  int n_starts = 5;
  int max_evals = 150;        // Nelder-Mead budget per start
  int polish_evals = 200;     // extra budget for the best start
  double simplex_tol = 1e-4;  // stop when the simplex diameter falls below
};

// Multistart Nelder-Mead over the box.  Trial points outside the box are
// clamped with a quadratic penalty, so a minimizer pushed against the box
// lands exactly on the boundary (and is flagged).  weight = two_step first
// minimizes under the identity weight, fixes W at the first-stage minimizer,
// and re-minimizes.  Throws when every start fails, with per-start reports.
GmmEstimate gmm_estimate(const GmmSpec& spec, const MarketPanel& data,
                         const OptimOptions& opts = {});

}  // namespace rcd
