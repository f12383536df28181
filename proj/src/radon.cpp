// rcdemand — market-level demand from heterogeneous random-coefficient
// discrete-choice models: simulation, share inversion, density recovery.
//
// Sphere grids, sinogram invariants, the forward hyperplane integral and the
// menu reflection maps used by the marginalization construction.

#include "rcdemand/radon.hpp"

#include <cmath>
#include <numbers>

namespace rcd {

void SphereGrid::validate() const {
  require_config(q >= 1, "sphere grid: dimension must be >= 1");
  require_config(!directions.empty(), "sphere grid: no directions");
  for (const Eigen::VectorXd& w : directions) {
    require_config(static_cast<int>(w.size()) == q,
                   "sphere grid: direction dimension mismatch");
    require_config(std::abs(w.norm() - 1.0) <= 1e-12,
                   "sphere grid: directions must be unit vectors");
    require_config(w[q - 1] >= 0.0,
                   "sphere grid: directions must lie on the upper hemisphere "
                   "(last coordinate >= 0)");
  }
  require_config(n_offsets >= 2, "sphere grid: need at least 2 offsets");
  require_config(u_max > u_min,
                 "sphere grid: offsets must be strictly increasing");
}

SphereGrid SphereGrid::uniform_circle(int n_dir, double u_min, double u_max,
                                      int n_offsets) {
  require_config(n_dir >= 1, "sphere grid: need at least one direction");
  SphereGrid grid;
  grid.q = 2;
  grid.u_min = u_min;
  grid.u_max = u_max;
  grid.n_offsets = n_offsets;
  grid.directions.reserve(n_dir);
  for (int k = 0; k < n_dir; ++k) {
    const double angle = std::numbers::pi * k / n_dir;
    Eigen::VectorXd w(2);
    w << std::cos(angle), std::sin(angle);
    grid.directions.push_back(std::move(w));
  }
  grid.validate();
  return grid;
}

SphereGrid SphereGrid::fibonacci_hemisphere(int n_sphere, double u_min,
                                            double u_max, int n_offsets) {
  require_config(n_sphere >= 2, "sphere grid: need at least 2 sphere samples");
  SphereGrid grid;
  grid.q = 3;
  grid.u_min = u_min;
  grid.u_max = u_max;
  grid.n_offsets = n_offsets;
  const double golden_angle =
      std::numbers::pi * (3.0 - std::sqrt(5.0));  // 2*pi*(1 - 1/phi)
  for (int i = 0; i < n_sphere; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n_sphere;
    if (z < 0.0) break;  // z decreases with i; keep the upper hemisphere
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double angle = golden_angle * i;
    Eigen::VectorXd w(3);
    w << rho * std::cos(angle), rho * std::sin(angle), z;
    w /= w.norm();
    grid.directions.push_back(std::move(w));
  }
  grid.validate();
  return grid;
}

void Sinogram::validate(double monotone_tol) const {
  grid.validate();
  require_config(phi.rows() == grid.n_directions() &&
                     phi.cols() == grid.n_offsets,
                 "sinogram: phi shape must be n_directions x n_offsets");
  for (int d = 0; d < phi.rows(); ++d)
    for (int k = 1; k < phi.cols(); ++k)
      require_numerical(phi(d, k) + monotone_tol >= phi(d, k - 1),
                        "sinogram: phi must be non-decreasing in the offset");
  if (has_dphi()) {
    require_config(dphi.rows() == phi.rows() && dphi.cols() == phi.cols(),
                   "sinogram: dphi shape must match phi");
    require_numerical(dphi.minCoeff() >= -1e-8,
                      "sinogram: dphi must be >= -1e-8");
  }
}

double radon_forward(const CoefficientDensity& density,
                     const Eigen::VectorXd& w, double u) {
  require_config(static_cast<int>(w.size()) == density.dim(),
                 "radon_forward: direction dimension mismatch");
  require_config(std::abs(w.norm() - 1.0) <= 1e-12,
                 "radon_forward: direction must be a unit vector");
  return density.projection_pdf(w, u);
}

Sinogram exact_sinogram(const CoefficientDensity& density,
                        const SphereGrid& grid) {
  grid.validate();
  require_config(grid.q == density.dim(),
                 "exact_sinogram: grid/density dimension mismatch");
  Sinogram sino;
  sino.grid = grid;
  const int n_dir = grid.n_directions();
  sino.phi.resize(n_dir, grid.n_offsets);
  sino.dphi.resize(n_dir, grid.n_offsets);
  for (int d = 0; d < n_dir; ++d) {
    const Eigen::VectorXd& w = grid.directions[d];
    for (int k = 0; k < grid.n_offsets; ++k) {
      const double u = grid.offset(k);
      sino.phi(d, k) = density.projection_cdf(w, u);
      sino.dphi(d, k) = density.projection_pdf(w, u);
    }
  }
  sino.validate();
  return sino;
}

ProductMenu marginalization_map(int j, const std::vector<int>& flip,
                                const ProductMenu& menu) {
  const int n = static_cast<int>(menu.p.size());
  require_config(j >= 0 && j < n, "marginalization map: good index range");
  std::vector<bool> in_flip(n, false);
  for (int i : flip) {
    require_config(i >= 0 && i < n, "marginalization map: flip index range");
    require_config(i != j,
                   "marginalization map: the kept good cannot be reflected");
    require_config(!in_flip[i], "marginalization map: duplicate flip index");
    in_flip[i] = true;
  }
  ProductMenu out = menu;
  for (int i = 0; i < n; ++i) {
    if (!in_flip[i]) continue;
    out.x2.row(i) = 2.0 * menu.x2.row(j) - menu.x2.row(i);
    out.p[i] = 2.0 * menu.p[j] - menu.p[i];
    out.delta[i] = 2.0 * menu.delta[j] - menu.delta[i];
  }
  return out;
}

ProductMenu own_flip_map(int j, const ProductMenu& menu) {
  const int n = static_cast<int>(menu.p.size());
  require_config(j >= 0 && j < n, "own-flip map: good index range");
  ProductMenu out = menu;
  const Eigen::RowVectorXd xj = menu.x2.row(j);
  const double pj = menu.p[j];
  const double dj = menu.delta[j];
  for (int i = 0; i < n; ++i) {
    out.x2.row(i) = menu.x2.row(i) - 2.0 * xj;
    out.p[i] = menu.p[i] - 2.0 * pj;
    out.delta[i] = menu.delta[i] - 2.0 * dj;
  }
  return out;
}

Sinogram differentiate_offset(Sinogram sino) {
  sino.grid.validate();
  require_config(sino.grid.n_offsets >= 3,
                 "differentiate_offset: need at least 3 offsets");
  require_config(sino.phi.rows() == sino.grid.n_directions() &&
                     sino.phi.cols() == sino.grid.n_offsets,
                 "differentiate_offset: phi shape mismatch");
  const double step = sino.grid.offset_step();
  const int n = sino.grid.n_offsets;
  sino.dphi.resize(sino.phi.rows(), n);
  for (int d = 0; d < sino.phi.rows(); ++d) {
    sino.dphi(d, 0) = (sino.phi(d, 1) - sino.phi(d, 0)) / step;
    for (int k = 1; k < n - 1; ++k)
      sino.dphi(d, k) =
          (sino.phi(d, k + 1) - sino.phi(d, k - 1)) / (2.0 * step);
    sino.dphi(d, n - 1) = (sino.phi(d, n - 1) - sino.phi(d, n - 2)) / step;
  }
  sino.dphi = sino.dphi.cwiseMax(-1e-8);
  return sino;
}

}  // namespace rcd
