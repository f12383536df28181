// rcdemand — market-level demand from heterogeneous random-coefficient
// discrete-choice models: simulation, share inversion, density recovery.
//
// Characteristic-function division with a relative spectral cutoff, inverse
// Fourier transforms onto density lattices, the conditional per-cell variant
// and product-form joint composition.

#include "rcdemand/deconv.hpp"

#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <vector>

namespace rcd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_same_lattice(const CharacteristicFunction& a,
                          const CharacteristicFunction& b) {
  require_config(a.n() == b.n() && a.t_min == b.t_min && a.t_max == b.t_max,
                 "cf_ratio: frequency lattices must match");
}

// Forward transform matrix E(k, i) = exp(i t_k x_i) * w_i for a slice axis
// with trapezoid weights w, so that psi = E * f for slice values f.
Eigen::MatrixXcd forward_matrix(const CharacteristicFunction& shape,
                                const GridAxis& axis) {
  const std::complex<double> I(0.0, 1.0);
  Eigen::MatrixXcd E(shape.n(), axis.n);
  for (int k = 0; k < shape.n(); ++k) {
    const double t = shape.freq(k);
    for (int i = 0; i < axis.n; ++i) {
      const double w = (i == 0 || i == axis.n - 1) ? 0.5 : 1.0;
      E(k, i) = w * axis.step() * std::exp(I * (t * axis.node(i)));
    }
  }
  return E;
}

// Inverse transform matrix B(j, k) = exp(-i t_k x_j) * step / (2 pi), so
// that f = Re(B * psi) on the output axis.
Eigen::MatrixXcd inverse_matrix(const CharacteristicFunction& shape,
                                const GridAxis& axis) {
  const std::complex<double> I(0.0, 1.0);
  Eigen::MatrixXcd B(axis.n, shape.n());
  for (int j = 0; j < axis.n; ++j)
    for (int k = 0; k < shape.n(); ++k)
      B(j, k) =
          std::exp(-I * (shape.freq(k) * axis.node(j))) * shape.step() / kTwoPi;
  return B;
}

}  // namespace

int CharacteristicFunction::zero_index() const {
  require_config(n() >= 2, "characteristic function: need >= 2 frequencies");
  const int k = static_cast<int>(std::lround(-t_min / step()));
  require_config(k >= 0 && k < n() && std::abs(freq(k)) <= 1e-9 * step(),
                 "characteristic function: zero frequency must lie on the "
                 "lattice");
  return k;
}

void CharacteristicFunction::validate(double tol) const {
  require_config(t_max > t_min,
                 "characteristic function: frequency range must be "
                 "increasing");
  const int k0 = zero_index();
  require_numerical(std::abs(values[k0] - std::complex<double>(1.0, 0.0)) <=
                        tol,
                    "characteristic function: value at t = 0 must be 1");
  // -freq(k) = freq(2*k0 - k) whenever both indices are in range.
  for (int k = 0; k < n(); ++k) {
    const int m = 2 * k0 - k;
    if (m < 0 || m >= n()) continue;
    require_numerical(std::abs(values[m] - std::conj(values[k])) <= tol,
                      "characteristic function: Hermitian symmetry violated");
  }
}

CharacteristicFunction cf_from_density(const CoefficientDensity& density,
                                       double t_lim, int n) {
  require_config(density.dim() == 1,
                 "cf_from_density: density must be one-dimensional");
  require_config(t_lim > 0.0, "cf_from_density: t_lim must be positive");
  require_config(n >= 2 && n % 2 == 0,
                 "cf_from_density: need an even number of frequencies");
  CharacteristicFunction psi;
  psi.t_min = -t_lim;
  psi.t_max = t_lim;
  psi.values.resize(n);
  for (int k = 0; k < n; ++k) psi.values[k] = density.cf(psi.freq(k));
  return psi;
}

CharacteristicFunction cf_conj(CharacteristicFunction psi) {
  psi.values = psi.values.conjugate();
  return psi;
}

CharacteristicFunction cf_ratio(const CharacteristicFunction& num,
                                const CharacteristicFunction& den,
                                double cutoff_rel) {
  require_same_lattice(num, den);
  require_config(cutoff_rel > 0.0, "cf_ratio: cutoff must be positive");
  const double floor = cutoff_rel * std::abs(den.values[den.zero_index()]);
  CharacteristicFunction out = num;
  int kept = 0;
  for (int k = 0; k < num.n(); ++k) {
    if (std::abs(den.values[k]) >= floor) {
      out.values[k] = num.values[k] / den.values[k];
      ++kept;
    } else {
      out.values[k] = 0.0;
    }
  }
  require_numerical(kept > 0,
                    "deconvolve: noise characteristic function is below the "
                    "cutoff at every frequency");
  return out;
}

DensityGrid cf_to_density(const CharacteristicFunction& psi,
                          const GridAxis& axis) {
  require_config(axis.n >= 2, "cf_to_density: need >= 2 output nodes");
  const std::complex<double> I(0.0, 1.0);
  DensityGrid out(std::vector<GridAxis>{axis});
  for (int j = 0; j < axis.n; ++j) {
    const double x = axis.node(j);
    double acc = 0.0;
    for (int k = 0; k < psi.n(); ++k)
      acc += std::real(psi.values[k] * std::exp(-I * (psi.freq(k) * x)));
    out[j] = acc * psi.step() / kTwoPi;
  }
  out.clip_negative();
  out.normalize();
  return out;
}

DensityGrid deconvolve(const CharacteristicFunction& psi_sum,
                       const CharacteristicFunction& psi_noise,
                       const GridAxis& axis, const DeconvolveOptions& opts) {
  return cf_to_density(cf_ratio(psi_sum, psi_noise, opts.cutoff_rel), axis);
}

DensityGrid deconvolve_conditional(const DensityGrid& sum_grid,
                                   const DensityGrid& noise_grid,
                                   const GridAxis& out_axis,
                                   const DeconvolveOptions& opts, double t_lim,
                                   int n_freq, double mass_floor,
                                   DeconvolveReport* report) {
  require_config(sum_grid.dim() >= 2 && sum_grid.dim() == noise_grid.dim(),
                 "deconvolve_conditional: need matching joint grids with a "
                 "conditioning block");
  const int dim = sum_grid.dim();
  for (int d = 0; d + 1 < dim; ++d) {
    const GridAxis& a = sum_grid.axis(d);
    const GridAxis& b = noise_grid.axis(d);
    require_config(a.lo == b.lo && a.hi == b.hi && a.n == b.n,
                   "deconvolve_conditional: conditioning axes must match");
  }
  require_config(t_lim > 0.0 && n_freq >= 2 && n_freq % 2 == 0,
                 "deconvolve_conditional: bad frequency lattice");

  CharacteristicFunction shape;
  shape.t_min = -t_lim;
  shape.t_max = t_lim;
  shape.values = Eigen::VectorXcd::Zero(n_freq);
  const Eigen::MatrixXcd E_sum = forward_matrix(shape, sum_grid.axis(dim - 1));
  const Eigen::MatrixXcd E_noise =
      forward_matrix(shape, noise_grid.axis(dim - 1));
  const Eigen::MatrixXcd B = inverse_matrix(shape, out_axis);

  const int n_sum = sum_grid.axis(dim - 1).n;
  const int n_noise = noise_grid.axis(dim - 1).n;
  std::int64_t n_cells = 1;
  for (int d = 0; d + 1 < dim; ++d) n_cells *= sum_grid.axis(d).n;

  // Trapezoid weights along the last axis, for cell masses.
  const auto last_weight = [](const GridAxis& ax, int i) {
    return ((i == 0 || i == ax.n - 1) ? 0.5 : 1.0) * ax.step();
  };
  // Trapezoid weight of a conditioning cell over the leading axes, so cell
  // masses are probabilities and mass_used sums toward 1.
  const auto leading_weight = [&](std::int64_t cell) {
    double w = 1.0;
    for (int d = dim - 2; d >= 0; --d) {
      const GridAxis& ax = noise_grid.axis(d);
      const int idx = static_cast<int>(cell % ax.n);
      cell /= ax.n;
      w *= ((idx == 0 || idx == ax.n - 1) ? 0.5 : 1.0) * ax.step();
    }
    return w;
  };

  // Per-cell recovered densities, then a deterministic weighted reduction.
  Eigen::MatrixXd per_cell = Eigen::MatrixXd::Zero(n_cells, out_axis.n);
  std::vector<double> weight(n_cells, 0.0);
  std::vector<char> kept(n_cells, 0);
  std::exception_ptr failure;

#pragma omp parallel for schedule(static)
  for (std::int64_t cell = 0; cell < n_cells; ++cell) {
    try {
      Eigen::VectorXcd f_sum(n_sum), f_noise(n_noise);
      double noise_slice = 0.0;
      for (int i = 0; i < n_noise; ++i) {
        const double v = noise_grid[cell * n_noise + i];
        f_noise[i] = v;
        noise_slice += v * last_weight(noise_grid.axis(dim - 1), i);
      }
      const double cell_mass = noise_slice * leading_weight(cell);
      if (cell_mass < mass_floor) continue;
      double sum_slice = 0.0;
      for (int i = 0; i < n_sum; ++i) {
        const double v = sum_grid[cell * n_sum + i];
        f_sum[i] = v;
        sum_slice += v * last_weight(sum_grid.axis(dim - 1), i);
      }
      if (sum_slice * leading_weight(cell) < mass_floor) continue;

      CharacteristicFunction psi_sum = shape;
      psi_sum.values = (E_sum * f_sum) / sum_slice;
      CharacteristicFunction psi_noise = shape;
      psi_noise.values = (E_noise * f_noise) / noise_slice;
      const CharacteristicFunction ratio =
          cf_ratio(psi_sum, psi_noise, opts.cutoff_rel);
      const Eigen::VectorXd f = (B * ratio.values).real();
      for (int j = 0; j < out_axis.n; ++j)
        per_cell(cell, j) = std::max(0.0, f[j]);
      weight[cell] = cell_mass;
      kept[cell] = 1;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  DeconvolveReport local;
  local.cells_total = static_cast<int>(n_cells);
  DensityGrid out(std::vector<GridAxis>{out_axis});
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(out_axis.n);
  for (std::int64_t cell = 0; cell < n_cells; ++cell) {
    if (!kept[cell]) {
      ++local.cells_skipped;
      continue;
    }
    // The conditioning-cell quadrature weight is common up to the leading
    // axes' trapezoid factors, which cancel in the final renormalization;
    // conditional mass is the meaningful weight.
    acc += weight[cell] * per_cell.row(cell).transpose();
    local.mass_used += weight[cell];
  }
  require_numerical(local.cells_skipped < local.cells_total,
                    "deconvolve_conditional: every conditioning cell is "
                    "below the mass floor");
  for (int j = 0; j < out_axis.n; ++j) out[j] = acc[j];
  out.normalize();
  if (report != nullptr) *report = local;
  return out;
}

DensityGrid compose_joint(const DensityGrid& marginal,
                          const std::vector<DensityGrid>& slices) {
  require_config(!slices.empty(), "compose_joint: no conditional slices");
  require_config(slices.size() == 1 ||
                     static_cast<std::int64_t>(slices.size()) ==
                         marginal.size(),
                 "compose_joint: need one shared slice or one per marginal "
                 "cell");
  const GridAxis& axis0 = slices[0].axis(0);
  for (const DensityGrid& s : slices) {
    require_config(s.dim() == 1, "compose_joint: slices must be 1-d");
    const GridAxis& a = s.axis(0);
    require_config(a.lo == axis0.lo && a.hi == axis0.hi && a.n == axis0.n,
                   "compose_joint: slices must share one axis");
  }
  std::vector<GridAxis> axes = marginal.axes();
  axes.push_back(axis0);
  DensityGrid out(axes);
  for (std::int64_t cell = 0; cell < marginal.size(); ++cell) {
    const DensityGrid& s = slices.size() == 1 ? slices[0] : slices[cell];
    for (int k = 0; k < axis0.n; ++k)
      out[cell * axis0.n + k] = marginal[cell] * s[k];
  }
  out.normalize();
  return out;
}

}  // namespace rcd
