// Core domain types: menu structure, taste-shock law, per-draw coefficients,
// per-market product characteristics, and individual choice.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rcdemand/density.hpp"

namespace rcd {

enum class MenuKind {
  multinomial,  // J goods + outside, pick at most one
  bundles2,     // 2 goods, menu {(0,0),(1,0),(0,1),(1,1)}
  multiunit2,   // 2 goods, menu {(0,0),(1,0),(0,1),(1,1),(2,0),(2,1)}
};

// Law of the per-good taste shocks epsilon.
struct EpsSpec {
  enum class Family { gumbel, normal };
  Family family = Family::gumbel;
  Eigen::MatrixXd cov;  // normal family only: per-good covariance

  static EpsSpec gumbel();
  static EpsSpec normal(Eigen::MatrixXd cov);
  static EpsSpec normal_iid(int n_goods);
};

struct ModelSpec {
  MenuKind menu = MenuKind::multinomial;
  int n_goods = 1;
  int d_x = 2;             // characteristics per product incl. the unit-coefficient one
  double sigma_eps = 1.0;  // 0 (pure characteristics) or 1 (tastes for products)
  EpsSpec eps;

  int n_bundle_effects() const;  // 0 / 1 (Delta) / 3 (Delta11, Delta20, Delta21)
  int n_alternatives() const;    // menu size including the outside option
  // Dimension of the structural coefficient vector (beta2, alpha, bundle
  // effects) that a CoefficientDensity for this spec must have.
  int structural_dim() const;
  std::vector<std::string> alternative_labels() const;
  void validate() const;
};

// One consumer's coefficients.
struct CoefficientDraw {
  Eigen::VectorXd beta2;          // length d_x - 1
  double alpha = 0.0;
  Eigen::VectorXd eps;            // per good; zero when unused
  Eigen::VectorXd bundle_effects; // length n_bundle_effects()
};

// Per-market product data: one row per good.
struct ProductMenu {
  Eigen::MatrixXd x2;     // n_goods x (d_x - 1)
  Eigen::VectorXd p;      // log price
  Eigen::VectorXd delta;  // vertical index (quality + unobservable)

  void validate(const ModelSpec& spec) const;
};

// Utility of every alternative for one draw; element 0 is the outside option
// (utility exactly 0).  Label order matches ModelSpec::alternative_labels().
Eigen::VectorXd utilities(const ModelSpec& spec, const CoefficientDraw& draw,
                          const ProductMenu& menu);

// Argmax choice; ties break to the lowest index.  NaN utilities are an error.
int choose(const Eigen::VectorXd& u);

// Multi-unit sanity check: the chosen quantity pair must beat every menu
// neighbor (one unit added or removed).  True for any argmax; exposed for
// tests and used as a debug assertion by the simulator.
bool multiunit_neighbors_beaten(const Eigen::VectorXd& u, int chosen);

// Map density draws onto structural coefficients (beta2, alpha, bundle
// effects).  Taste shocks are left at zero; the simulator fills them.
std::vector<CoefficientDraw> sample_coefficients(const ModelSpec& spec,
                                                 const CoefficientDensity& density,
                                                 int n, std::uint64_t seed);

// Unpack one structural vector into a draw (same layout as above).
void structural_to_draw(const ModelSpec& spec, const double* theta,
                        CoefficientDraw& draw);

}  // namespace rcd
