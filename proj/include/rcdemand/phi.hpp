// rcdemand — market-level demand from heterogeneous random-coefficient
// discrete-choice models: simulation, share inversion, density recovery.
//
// Builds the projection CDF Phi(w,u) = P(w'theta_slot <= u) from simulated
// demand, one strategy per menu structure:
//
//  - pcm (no taste shocks): the signed sum of demand over competitor
//    reflections collapses to the single-good comparison, so
//    Phi(w,u) = 1 - sum_subsets demand_j(reflected menu) with product j
//    placed at (x2,p) = w and delta_j = -u.  Slot: (beta2, alpha).
//  - blp (multinomial with taste shocks): competitors' vertical indices are
//    pinned at -M, leaving the j-vs-outside comparison up to a truncation
//    bias that shrinks with M.  Slot: (beta2, alpha, eps_j); direction
//    (x2_j, p_j, 1)/norm with the last coordinate strictly positive.
//  - bundle00 / bundle11: the other good's index is pinned at -M (+M), so
//    demand for buying nothing (both goods) pins P on one side of a
//    hyperplane in the slot (beta2, alpha, eps_j) ((beta2, alpha,
//    eps_j + bundle effect)).
//  - multi00 / multi01 / multi20 / multi21: same construction on the
//    two-good multi-unit menu; defined for j = 0 (the good that can be
//    bought twice).  Slots carry eps_1, eps_1 + D11, eps_1 + D20,
//    eps_1 + D21 - D11 respectively, where D* are the bundle effects of the
//    (2,0), (2,1) and (1,1) alternatives.
//
// Demand values whose alternative grows with the slot index enter as
// complements so that every stored Phi is a CDF in u.  assemble_sinogram
// evaluates whole (direction x offset) lattices with one sorted sweep of the
// simulation draws per direction, reproducing the pointwise builders draw
// for draw.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rcdemand/common.hpp"
#include "rcdemand/density.hpp"
#include "rcdemand/model.hpp"
#include "rcdemand/radon.hpp"

namespace rcd {

// Maps a menu to its vector of alternative shares.
using DemandOracle = std::function<Eigen::VectorXd(const ProductMenu&)>;

// Frozen-seed Monte Carlo demand: aggregate_shares_mc with fixed draws.
DemandOracle mc_demand_oracle(const ModelSpec& spec,
                              const CoefficientDensity& density, int n_draws,
                              std::uint64_t seed);

// Optional box constraint describing where the demand oracle is trusted.
// Unbounded by default.
struct SupportBox {
  double x2_lo = -std::numeric_limits<double>::infinity();
  double x2_hi = std::numeric_limits<double>::infinity();
  double p_lo = -std::numeric_limits<double>::infinity();
  double p_hi = std::numeric_limits<double>::infinity();
  double delta_lo = -std::numeric_limits<double>::infinity();
  double delta_hi = std::numeric_limits<double>::infinity();

  bool unbounded() const;
  // Empty string if the menu lies inside the box, else a description of the
  // first violation.
  std::string check(const ProductMenu& menu) const;
};

enum class PhiStrategy {
  pcm,
  blp,
  bundle00,
  bundle11,
  multi00,
  multi01,
  multi20,
  multi21,
};

struct PhiOptions {
  int n_draws = 4096;
  std::uint64_t seed = 1234;
  double truncation = 50.0;   // M: pinned competitor index magnitude
  double bias_budget = 1e-3;  // acceptable |value(M) - value(M/2)| gap
  SupportBox support;
};

// Pointwise value with its truncation diagnostic.
struct PhiValue {
  double value = 0.0;           // projection-CDF convention
  double truncation_gap = 0.0;  // |value at M - value at M/2|
  bool bias_warning = false;    // gap exceeded the budget
};

// No-taste-shock marginalization: 1 - sum over competitor subsets of the
// good-j share of the reflected menus.  Every reflected menu is checked
// against `support`.
double build_phi_pcm(const ModelSpec& spec, const DemandOracle& oracle, int j,
                     const ProductMenu& menu, const SupportBox& support = {});

// Multinomial-with-shocks limit: good-j share with every competitor's delta
// pinned at -M, complemented.  Diagnostic compares M against M/2.
PhiValue build_phi_blp(const ModelSpec& spec, const DemandOracle& oracle,
                       int j, const ProductMenu& menu,
                       const PhiOptions& opts = {});

// Bundle / multi-unit limit for the given strategy (bundle00/bundle11 with
// j in {0,1}; multi00/multi01/multi20/multi21 with j = 0).  The other
// good's delta is pinned at -M or +M as the strategy requires.
PhiValue build_phi_bundle(const ModelSpec& spec, const DemandOracle& oracle,
                          PhiStrategy strategy, int j, const ProductMenu& menu,
                          const PhiOptions& opts = {});

// Sum over all competitor subsets of the good-j share of the reflected
// menus; with `with_own_flip` also adds the shares of the own-negated
// reflections, in which case the sum is 1 in expectation (partition of the
// draw space).  Without it the sum estimates P(own systematic utility > 0).
double marginalization_sum(const DemandOracle& oracle, int j,
                           const ProductMenu& menu, bool with_own_flip);

// Menu whose good-j row represents the lattice point (w,u): for pcm,
// (x2_j, p_j) = w and delta_j = -u; otherwise (x2_j, p_j, 1) = w / w_last
// and delta_j = -u / w_last (config error when w_last is too small).
// Competitor rows are copied from `menu` unchanged (not pinned).
ProductMenu realize_menu(const ModelSpec& spec, PhiStrategy strategy, int j,
                         const ProductMenu& menu, const Eigen::VectorXd& w,
                         double u);

// Evaluate Phi on a full (direction x offset) lattice by sorted sweeps over
// the simulation draws (identical draws to mc_demand_oracle(spec, density,
// opts.n_draws, opts.seed)).  `menu` supplies the competitor rows; product
// j's characteristics are replaced per direction/offset.  Support-box
// violations (and directions whose last coordinate is too small to realize
// a menu, for slot strategies) are appended to `violations` if given; their
// cells are still filled.  Results are bit-identical between the parallel
// and serial variants and across thread counts.
Sinogram assemble_sinogram(const ModelSpec& spec,
                           const CoefficientDensity& density,
                           PhiStrategy strategy, int j,
                           const ProductMenu& menu, const SphereGrid& grid,
                           const PhiOptions& opts,
                           std::vector<std::string>* violations = nullptr);
Sinogram assemble_sinogram_serial(const ModelSpec& spec,
                                  const CoefficientDensity& density,
                                  PhiStrategy strategy, int j,
                                  const ProductMenu& menu,
                                  const SphereGrid& grid,
                                  const PhiOptions& opts,
                                  std::vector<std::string>* violations = nullptr);

}  // namespace rcd
