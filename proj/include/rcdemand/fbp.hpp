// Filtered back projection: invert the Radon transform of a coefficient
// density from its sinogram offset-derivative.  The filter is the
// band-limited ramp kernel
//   Omega_r(s) = (2 pi)^{-q} int_0^r sigma^{q-1} cos(sigma s) dsigma,
// the projections are convolved in the offset by a trapezoid sum, and the
// adjoint integrates over the full sphere by mirroring the stored
// hemisphere directions (the integrand is even).  Restricted to q in {2,3}.

#pragma once

#include <vector>

#include "rcdemand/grid.hpp"
#include "rcdemand/radon.hpp"

namespace rcd {

// Band-limited ramp filter kernel in dimension q (2 or 3), bandwidth r > 0.
// Closed forms, stabilized by a series expansion near s = 0:
//   q = 2: (1/4pi^2) [ r sin(rs)/s + (cos(rs) - 1)/s^2 ],  Omega_r(0) = r^2/(8 pi^2)
//   q = 3: (1/8pi^3) [ r^2 sin(rs)/s + 2 r cos(rs)/s^2 - 2 sin(rs)/s^3 ],
//          Omega_r(0) = r^3/(24 pi^3)
double ramp_kernel(int q, double r, double s);

struct FbpOptions {
  double r = 0.0;             // filter bandwidth; 0 = pi / offset step
  bool clip_negative = true;  // clip negative cells, then renormalize mass
};

struct FbpReport {
  double r = 0.0;              // bandwidth actually used
  double raw_mass = 0.0;       // lattice mass before any clipping
  double negative_mass = 0.0;  // mass of the negative part before clipping
};

// Reconstruct the density on the requested axes (axes.size() == grid.q).
// Requires dphi (run differentiate_offset or provide exact projections),
// at least 64 directions (q = 2) or 1024 (q = 3), and directions spread
// evenly over the hemisphere: limited-angle data is rejected.  Output cells
// outside the offset range of every projection receive no contribution.
DensityGrid fbp_invert(const Sinogram& sino, const std::vector<GridAxis>& axes,
                       const FbpOptions& opts = {},
                       FbpReport* report = nullptr);
DensityGrid fbp_invert_serial(const Sinogram& sino,
                              const std::vector<GridAxis>& axes,
                              const FbpOptions& opts = {},
                              FbpReport* report = nullptr);

}  // namespace rcd
