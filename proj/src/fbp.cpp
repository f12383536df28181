// rcdemand — market-level demand from heterogeneous random-coefficient
// discrete-choice models: simulation, share inversion, density recovery.
//
// Filtered back projection.  Per direction, the offset-derivative of the
// projection CDF is convolved with the band-limited ramp kernel by a
// trapezoid sum on the offset lattice; the filtered projection is then
// linearly interpolated at w'x for every output node and summed over
// directions with weight 2 * hemisphere_area / n_directions (the mirrored
// lower hemisphere contributes the same term, so the factor 2 replaces
// evaluating at -w).  The kernel depends on offsets only through their
// difference, so it is tabulated once per lag.

#include "rcdemand/fbp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <vector>

namespace rcd {

namespace {

constexpr double kPi = std::numbers::pi;

// Relative spread allowed in the mirrored second-moment spectrum before the
// direction set is declared limited-angle.
constexpr double kMomentLo = 0.6;
constexpr double kMomentHi = 1.4;

// Directions must cover the hemisphere densely enough for the angular
// quadrature behind the reconstruction weights.
int min_directions(int q) { return q == 2 ? 64 : 1024; }

// Reject direction sets concentrated on a sub-cone: for an even quadrature
// over the sphere the normalized second moment (q/n) sum w w' is the
// identity, so its eigenvalues stay near 1.
void check_angular_coverage(const SphereGrid& grid) {
  require_config(grid.n_directions() >= min_directions(grid.q),
                 "fbp_invert: insufficient angular coverage (need >= 64 "
                 "directions for q = 2, >= 1024 for q = 3)");
  Eigen::MatrixXd moment = Eigen::MatrixXd::Zero(grid.q, grid.q);
  for (const Eigen::VectorXd& w : grid.directions)
    moment += w * w.transpose();
  moment *= static_cast<double>(grid.q) / grid.n_directions();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(moment);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  require_config(lo >= kMomentLo && hi <= kMomentHi,
                 "fbp_invert: limited-angle data (directions concentrated on "
                 "part of the sphere) cannot be inverted");
}

// Filtered projection value at offset t by linear interpolation on the
// lattice; zero outside the covered offset range.
double interp_row(const Eigen::MatrixXd& filt, int d, double u_min,
                  double inv_step, int n, double t) {
  const double s = (t - u_min) * inv_step;
  if (s < 0.0 || s > n - 1) return 0.0;
  const int i0 = std::min(static_cast<int>(s), n - 2);
  const double frac = s - i0;
  return (1.0 - frac) * filt(d, i0) + frac * filt(d, i0 + 1);
}

DensityGrid invert_impl(const Sinogram& sino,
                        const std::vector<GridAxis>& axes,
                        const FbpOptions& opts, FbpReport* report,
                        bool parallel) {
  sino.validate();
  const SphereGrid& grid = sino.grid;
  require_config(grid.q == 2 || grid.q == 3,
                 "fbp_invert: coefficient dimension must be 2 or 3");
  require_config(sino.has_dphi(),
                 "fbp_invert: sinogram has no offset derivative (run "
                 "differentiate_offset first)");
  require_config(static_cast<int>(axes.size()) == grid.q,
                 "fbp_invert: output axes must match the coefficient "
                 "dimension");
  check_angular_coverage(grid);
  require_config(opts.r >= 0.0, "fbp_invert: bandwidth must be >= 0");

  const int n_dir = grid.n_directions();
  const int n_off = grid.n_offsets;
  const double step = grid.offset_step();
  const double r = opts.r > 0.0 ? opts.r : kPi / step;

  // Kernel values per lag, shared across directions.
  std::vector<double> kernel(n_off);
  for (int l = 0; l < n_off; ++l) kernel[l] = ramp_kernel(grid.q, r, l * step);

  // Trapezoid convolution of dphi with the kernel on the offset lattice.
  Eigen::MatrixXd filt(n_dir, n_off);
#pragma omp parallel for schedule(static) if (parallel)
  for (int d = 0; d < n_dir; ++d) {
    for (int k = 0; k < n_off; ++k) {
      double acc = 0.0;
      for (int m = 0; m < n_off; ++m) {
        const double tau = (m == 0 || m == n_off - 1) ? 0.5 : 1.0;
        acc += tau * kernel[std::abs(k - m)] * sino.dphi(d, m);
      }
      filt(d, k) = step * acc;
    }
  }

  // Back projection: sum the filtered projections at w'x over directions.
  DensityGrid out(axes);
  const double hemisphere = grid.q == 2 ? kPi : 2.0 * kPi;
  const double weight = 2.0 * hemisphere / n_dir;
  const double inv_step = 1.0 / step;
  const std::int64_t n_nodes = out.size();
  double* values = out.values().data();
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t flat = 0; flat < n_nodes; ++flat) {
    double x[3] = {0.0, 0.0, 0.0};
    out.node(flat, x);
    double acc = 0.0;
    for (int d = 0; d < n_dir; ++d) {
      const double* w = grid.directions[d].data();
      double t = 0.0;
      for (int i = 0; i < grid.q; ++i) t += w[i] * x[i];
      acc += interp_row(filt, d, grid.u_min, inv_step, n_off, t);
    }
    values[flat] = weight * acc;
  }

  double negative_mass = 0.0;
  for (std::int64_t flat = 0; flat < n_nodes; ++flat)
    if (values[flat] < 0.0) negative_mass -= values[flat] * out.quad_weight(flat);
  if (report != nullptr) {
    report->r = r;
    report->raw_mass = out.mass();
    report->negative_mass = negative_mass;
  }
  if (opts.clip_negative) {
    out.clip_negative();
    out.normalize();
  }
  return out;
}

}  // namespace

double ramp_kernel(int q, double r, double s) {
  require_config(q == 2 || q == 3, "ramp_kernel: dimension must be 2 or 3");
  require_config(r > 0.0, "ramp_kernel: bandwidth must be positive");
  const double t = r * s;
  const double t2 = t * t;
  if (q == 2) {
    const double scale = r * r / (4.0 * kPi * kPi);
    if (std::abs(t) < 0.05)  // series keeps the s -> 0 limit exact
      return scale *
             (0.5 - t2 / 8.0 + t2 * t2 / 144.0 - t2 * t2 * t2 / 5760.0);
    return scale * (std::sin(t) / t + (std::cos(t) - 1.0) / t2);
  }
  const double scale = r * r * r / (8.0 * kPi * kPi * kPi);
  if (std::abs(t) < 0.05)
    return scale *
           (1.0 / 3.0 - t2 / 10.0 + t2 * t2 / 168.0 - t2 * t2 * t2 / 6480.0);
  return scale * (std::sin(t) / t + 2.0 * std::cos(t) / t2 -
                  2.0 * std::sin(t) / (t2 * t));
}

DensityGrid fbp_invert(const Sinogram& sino, const std::vector<GridAxis>& axes,
                       const FbpOptions& opts, FbpReport* report) {
  return invert_impl(sino, axes, opts, report, true);
}

DensityGrid fbp_invert_serial(const Sinogram& sino,
                              const std::vector<GridAxis>& axes,
                              const FbpOptions& opts, FbpReport* report) {
  return invert_impl(sino, axes, opts, report, false);
}

}  // namespace rcd
