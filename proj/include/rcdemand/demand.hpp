// Aggregate demand over a menu: raw Monte Carlo over coefficient draws and
// taste shocks, and smoothed evaluators that integrate the taste shocks in
// closed form per draw (differentiable inputs for the share inverters).

#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "rcdemand/density.hpp"
#include "rcdemand/model.hpp"

namespace rcd {

// Raw Monte Carlo shares: n_draws consumers, exact argmax choice.
// Deterministic per seed for any thread count (integer draw counts).
Eigen::VectorXd aggregate_shares_mc(const ModelSpec& spec,
                                    const CoefficientDensity& density,
                                    const ProductMenu& menu, int n_draws,
                                    std::uint64_t seed);

// Single-threaded reference implementation (identical results by contract).
Eigen::VectorXd aggregate_shares_mc_serial(const ModelSpec& spec,
                                           const CoefficientDensity& density,
                                           const ProductMenu& menu, int n_draws,
                                           std::uint64_t seed);

// Closed-form multinomial shares for one coefficient draw with unit-scale
// Gumbel taste shocks and a deterministic outside utility of 0:
//   share_j = (e^{v_j} / S) (1 - e^{-S}),  share_0 = e^{-S},  S = sum_k e^{v_k}.
Eigen::VectorXd conditional_logit_shares(const ModelSpec& spec,
                                         const CoefficientDraw& draw,
                                         const ProductMenu& menu);

// Choice probabilities for one draw with the taste shocks integrated out
// analytically: Gumbel -> conditional logit (multinomial only); normal ->
// exact orthant/band probabilities via bivariate normal (menus of <= 2 goods).
Eigen::VectorXd menu_choice_probs(const ModelSpec& spec,
                                  const CoefficientDraw& draw,
                                  const ProductMenu& menu);

// Shares with taste shocks integrated analytically per structural draw.
// sigma_eps = 1: averages menu_choice_probs over n_draws density draws
// (quasi-random Halton draws when halton = true).
// sigma_eps = 0 (pure characteristics): integrates the price coefficient
// conditional on the remaining tastes in closed form (normal/mixture
// densities), so shares are smooth in delta even without taste shocks.
Eigen::VectorXd aggregate_shares_smoothed(const ModelSpec& spec,
                                          const CoefficientDensity& density,
                                          const ProductMenu& menu, int n_draws,
                                          std::uint64_t seed,
                                          bool halton = false);

// Bivariate-normal probability that a two-good bundle comparison lands in the
// region bounded by the given index cutoffs, with the branch selected by the
// sign of the bundle effect:
//   delta_negative:  P(eps1 < h1, eps2 < h2)          (h3 unused)
//   otherwise:       P(eps1 < h2, eps1 + eps2 < h3)   (h1 unused)
double bundle_pair_probability(double h1, double h2, double h3,
                               bool delta_negative,
                               const Eigen::MatrixXd& eps_cov);

// Bundle shares averaged over a density on (beta2, alpha, Delta) with
// jointly normal taste shocks integrated exactly (simulated-moment form).
Eigen::VectorXd simulated_bundle_shares(const ProductMenu& menu,
                                        const CoefficientDensity& density,
                                        int n_draws, std::uint64_t seed,
                                        const Eigen::MatrixXd& eps_cov,
                                        bool halton = false);

// Closed-form alternative probabilities for the two-good bundle menu with iid
// standard normal taste shocks, plus derivatives with respect to the two
// vertical indices.  v_j = x2_j' b + a p_j + delta_j is the deterministic
// utility of good j alone and D the bundle effect.  Entries follow the
// bundles2 label order (00, 10, 01, 11); with all labels selected, value sums
// to 1 and each derivative vector sums to 0.  Matches menu_choice_probs with
// identity covariance up to bivariate-normal quadrature accuracy, at a
// fraction of the cost: the share-inversion loop inside the GMM criterion
// lives on this routine.  label_mask selects which labels to fill (bit k =
// label k); unselected entries stay 0, letting a two-label subsystem skip the
// other labels' bivariate-normal evaluations.
struct BundleProbsGrad {
  Eigen::Vector4d value;
  Eigen::Vector4d d1;  // d value / d delta_1
  Eigen::Vector4d d2;  // d value / d delta_2
};
BundleProbsGrad bundle_probs_iid_grad(double v1, double v2, double D,
                                      int label_mask = 0xF);

}  // namespace rcd
