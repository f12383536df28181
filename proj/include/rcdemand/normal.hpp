// Scalar and bivariate normal distribution helpers.
//
// norm_quantile uses Acklam's rational approximation polished by one Halley
// step, giving quantiles accurate to close to machine precision.  bvn_cdf
// integrates Plackett's correlation identity with composite Gauss-Legendre
// panels (graded toward |rho| = 1), comfortably below 1e-7 absolute error.

#pragma once

#include <vector>

namespace rcd {

double norm_pdf(double x);
double norm_cdf(double x);
// Inverse of norm_cdf on (0,1).
double norm_quantile(double p);

// P(X <= h, Y <= k) for standard bivariate normal with correlation rho.
double bvn_cdf(double h, double k, double rho);

// P(X <= c, Y <= a + b*X) for independent standard normal X, Y.
double gauss_affine_cdf(double c, double a, double b);

// One affine bound y <= a + b*x (or y >= a + b*x when used as a lower bound).
struct AffineBound {
  double a = 0.0;
  double b = 0.0;
};

// P(lo < X <= hi, max_j lower_j(X) < Y <= min_i upper_i(X)) for independent
// standard normal X, Y.  Empty bound lists mean "unbounded" on that side.
// Exact up to bvn_cdf accuracy: the envelopes are piecewise affine, and each
// piece reduces to differences of gauss_affine_cdf terms.
double gauss_envelope_prob(double lo, double hi,
                           const std::vector<AffineBound>& uppers,
                           const std::vector<AffineBound>& lowers);

// Gauss-Legendre nodes and weights on [-1, 1], computed on first use.
struct GaussLegendre {
  std::vector<double> x;
  std::vector<double> w;
};
const GaussLegendre& gauss_legendre(int n);

}  // namespace rcd
