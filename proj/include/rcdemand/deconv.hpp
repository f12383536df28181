// Characteristic-function machinery for disentangling additive components:
// when an observable is the sum of an unknown component and an independent
// "noise" component with known law, dividing the two characteristic
// functions and inverting the Fourier transform recovers the unknown
// component's density.  Frequencies where the noise CF falls below a
// relative cutoff are zeroed (spectral regularization), and the recovered
// density is clipped to be nonnegative and renormalized to mass one.
//
// The conditional variant runs one division per cell of a conditioning
// lattice (shared leading axes of two joint density grids) and averages the
// per-cell results weighted by cell mass, which is the right aggregation
// when the unknown component is independent of the conditioning variables.

#pragma once

#include <Eigen/Dense>
#include <complex>

#include "rcdemand/common.hpp"
#include "rcdemand/density.hpp"
#include "rcdemand/grid.hpp"

namespace rcd {

// Complex values on a uniform frequency lattice t_min + k * step,
// k = 0..n-1 with step = (t_max - t_min) / n (the endpoint t_max is
// excluded so that zero lies on the lattice for symmetric ranges).
struct CharacteristicFunction {
  double t_min = -40.0;
  double t_max = 40.0;
  Eigen::VectorXcd values;

  int n() const { return static_cast<int>(values.size()); }
  double step() const { return (t_max - t_min) / n(); }
  double freq(int k) const { return t_min + step() * k; }
  // Index of the zero frequency; config error if zero is not on the lattice.
  int zero_index() const;
  // Range and shape checks; psi(0) = 1 within tol; Hermitian symmetry
  // psi(-t) = conj(psi(t)) within tol at paired lattice points.
  void validate(double tol = 1e-6) const;
};

// Characteristic function of a one-dimensional density on the lattice
// [-t_lim, t_lim) with n points (closed forms for the parametric families,
// trapezoid quadrature for lattice densities).
CharacteristicFunction cf_from_density(const CoefficientDensity& density,
                                       double t_lim = 40.0, int n = 4096);

// CF of the negated variable (complex conjugate pointwise).
CharacteristicFunction cf_conj(CharacteristicFunction psi);

// Pointwise ratio num/den, zeroed where |den| < cutoff_rel * |den(0)|.
// Lattices must match.  Numerical error if every frequency is zeroed.
CharacteristicFunction cf_ratio(const CharacteristicFunction& num,
                                const CharacteristicFunction& den,
                                double cutoff_rel = 1e-3);

// Inverse Fourier transform onto the axis, clipped to >= 0 and
// renormalized to mass one.
DensityGrid cf_to_density(const CharacteristicFunction& psi,
                          const GridAxis& axis);

struct DeconvolveOptions {
  double cutoff_rel = 1e-3;  // relative to |psi_noise(0)|
};

// cf_to_density(cf_ratio(psi_sum, psi_noise)): density of the component X
// in sum = X + noise.
DensityGrid deconvolve(const CharacteristicFunction& psi_sum,
                       const CharacteristicFunction& psi_noise,
                       const GridAxis& axis,
                       const DeconvolveOptions& opts = {});

struct DeconvolveReport {
  int cells_total = 0;
  int cells_skipped = 0;   // leading-axis cells below the mass floor
  double mass_used = 0.0;  // conditioning mass carried by the kept cells
};

// Per-conditioning-cell deconvolution, averaged over cells.  sum_grid and
// noise_grid are joint lattices whose leading axes agree cell for cell; the
// last axis carries the summed variable (sum_grid) and the noise variable
// (noise_grid).  Cells whose noise-grid conditional mass is below mass_floor
// are skipped; the kept cells' recovered densities are averaged with the
// noise grid's cell-mass weights and renormalized.
DensityGrid deconvolve_conditional(const DensityGrid& sum_grid,
                                   const DensityGrid& noise_grid,
                                   const GridAxis& out_axis,
                                   const DeconvolveOptions& opts = {},
                                   double t_lim = 40.0, int n_freq = 4096,
                                   double mass_floor = 1e-6,
                                   DeconvolveReport* report = nullptr);

// Product-form joint density: out(cell, k) = marginal(cell) * slice(cell, k)
// on the tensor grid marginal axes x slice axis, renormalized to mass one.
// Pass one slice shared by every cell, or one per marginal cell (all on the
// same axis).
DensityGrid compose_joint(const DensityGrid& marginal,
                          const std::vector<DensityGrid>& slices);

}  // namespace rcd
