// rcdemand — market-level demand from heterogeneous random-coefficient
// discrete-choice models: simulation, share inversion, density recovery.
//
// Projection-space plumbing.  A SphereGrid pairs hemisphere directions with a
// uniform offset lattice; a Sinogram stores the projection CDF
// Phi(w,u) = P(w'theta <= u) on that grid, and after differentiation in the
// offset also its u-derivative, which equals the hyperplane integral of the
// coefficient density (the Radon transform).  radon_forward evaluates that
// hyperplane integral directly from a density, giving the oracle the
// demand-built sinograms are tested against.
//
// The menu maps support the marginalization construction for menus without
// taste shocks: reflecting a subset of competitors through product j leaves
// the single-good comparison intact while flipping pairwise ones, and the
// own-flip map translates the whole menu by -2x(product j) so that j's own
// index changes sign while every pairwise difference is preserved.

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rcdemand/common.hpp"
#include "rcdemand/density.hpp"
#include "rcdemand/model.hpp"

namespace rcd {

// Directions on the upper hemisphere (last coordinate >= 0) crossed with a
// uniform offset lattice u_min..u_max.
struct SphereGrid {
  int q = 2;                                // ambient coefficient dimension
  std::vector<Eigen::VectorXd> directions;  // unit vectors, last coord >= 0
  double u_min = -1.0;
  double u_max = 1.0;
  int n_offsets = 2;

  int n_directions() const { return static_cast<int>(directions.size()); }
  double offset_step() const { return (u_max - u_min) / (n_offsets - 1); }
  double offset(int k) const { return u_min + offset_step() * k; }
  // Unit norms to 1e-12, hemisphere condition, at least two increasing
  // offsets.
  void validate() const;

  // q = 2: directions at uniform angles pi*k/n_dir, k = 0..n_dir-1.
  static SphereGrid uniform_circle(int n_dir, double u_min, double u_max,
                                   int n_offsets);
  // q = 3: Fibonacci-sphere points with n_sphere samples on the full sphere,
  // filtered to the upper hemisphere (keeps floor(n_sphere/2) directions).
  static SphereGrid fibonacci_hemisphere(int n_sphere, double u_min,
                                         double u_max, int n_offsets);
};

// Projection CDF values per (direction, offset), plus the offset derivative
// once differentiate_offset has run.  phi is n_directions x n_offsets.
struct Sinogram {
  SphereGrid grid;
  Eigen::MatrixXd phi;
  Eigen::MatrixXd dphi;  // empty until differentiated

  bool has_dphi() const { return dphi.size() > 0; }
  // Shape checks; phi non-decreasing in the offset per direction (within
  // monotone_tol); dphi >= -1e-8 when present.
  void validate(double monotone_tol = 1e-12) const;
};

// Hyperplane integral of the density over {v : w'v = u} for a unit w.
double radon_forward(const CoefficientDensity& density,
                     const Eigen::VectorXd& w, double u);

// Analytic sinogram of a density: phi from the projection CDF, dphi from
// radon_forward, no differencing error.  Needs a density with closed-form
// projections (point mass, gaussian, mixture).
Sinogram exact_sinogram(const CoefficientDensity& density,
                        const SphereGrid& grid);

// Reflect the products in `flip` through product j: for i in flip,
// (x2,p,delta)_i -> 2*(x2,p,delta)_j - (x2,p,delta)_i; everything else
// unchanged.  j must not belong to `flip`; the map is an involution.
ProductMenu marginalization_map(int j, const std::vector<int>& flip,
                                const ProductMenu& menu);

// Translate every product's (x2,p,delta) by -2*(x2,p,delta)_j: product j's
// characteristics are negated while all pairwise differences are preserved.
// An involution.
ProductMenu own_flip_map(int j, const ProductMenu& menu);

// Fill dphi by central differences in the offset (one-sided at the ends),
// clipping at -1e-8 from below.  Needs at least 3 offsets.
Sinogram differentiate_offset(Sinogram sino);

}  // namespace rcd
