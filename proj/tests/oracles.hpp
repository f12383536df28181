// Independent numerical oracles for the unit tests: plain erfc-based normal
// functions and adaptive Simpson quadrature, deliberately sharing no code
// with the library paths they validate.

#pragma once

#include <functional>
#include <vector>

#include "rcdemand/normal.hpp"

namespace oracle {

double norm_pdf(double x);
double norm_cdf(double x);  // via std::erfc

// Adaptive Simpson integral of f on [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-11);

// P(X <= h, Y <= k) for standard bivariate normal, by integrating
// phi(x) * Phi((k - rho x) / sqrt(1 - rho^2)).
double bvn_cdf(double h, double k, double rho);

// Quadrature version of the band probability
// P(lo < X <= hi, max lowers < Y <= min uppers) for independent standard
// normals.
double envelope_prob(double lo, double hi,
                     const std::vector<rcd::AffineBound>& uppers,
                     const std::vector<rcd::AffineBound>& lowers);

// Monte Carlo standard error of a share estimate.
double mc_se(double p, double n);

}  // namespace oracle
