// Market-level panel data: per-market product characteristics, instruments,
// structural errors, and observed shares, plus a configurable synthetic
// data-generating process with endogenous prices.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rcdemand/density.hpp"
#include "rcdemand/model.hpp"

namespace rcd {

// One market; vector/matrix rows index goods.
struct Market {
  Eigen::VectorXd x1;      // quality covariate carrying the unit coefficient
  Eigen::MatrixXd x2;      // n_goods x (d_x - 1) taste covariates
  Eigen::VectorXd p;       // price
  Eigen::VectorXd xi;      // structural error (unobserved quality)
  Eigen::VectorXd delta;   // vertical index x1 + xi
  Eigen::MatrixXd z;       // n_goods x d_z excluded instruments
  Eigen::VectorXd shares;  // one entry per menu label
};

struct MarketPanel {
  MenuKind menu = MenuKind::bundles2;
  int n_goods = 2;
  int d_x = 2;
  int d_z = 1;
  std::vector<std::string> share_labels;  // alternative labels, menu order
  std::vector<Market> markets;

  void validate() const;
};

// Synthetic data-generating process.  Covariates and instruments are
// exogenous; prices load on the structural error (endogeneity) and on the
// first instrument: p = price_base + rho * xi + pi * z_1 + noise.
struct PanelDgp {
  double x1_mean = 0.0;
  double x1_sd = 0.5;
  double x2_lo = -1.0, x2_hi = 1.0;  // taste covariates: iid uniform
  double z_sd = 1.0;                 // instruments: iid centered normal
  int d_z = 1;
  double xi_sd = 0.25;
  double rho = 0.5;  // price loading on xi: 0 makes prices exogenous
  double pi = 0.4;   // price loading on the first instrument
  double price_base = 1.0;
  double price_noise_sd = 0.1;
  int share_draws = 2048;  // draws behind the recorded (observed) shares
  bool halton = true;

  void validate() const;
};

// Draw covariates and structural errors, price the goods, and record the
// smoothed model shares at the given coefficient density.  Deterministic in
// (seed, dgp); markets are independent across t.
MarketPanel generate_panel(const ModelSpec& spec,
                           const CoefficientDensity& density, int n_markets,
                           const PanelDgp& dgp, std::uint64_t seed);

}  // namespace rcd
