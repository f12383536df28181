// Random-coefficient densities: point masses, Gaussians, finite Gaussian
// mixtures, and lattice (grid) densities.  All expose sampling and the exact
// law of one-dimensional projections w'theta, which is what the tomographic
// pipeline consumes.

#pragma once

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "rcdemand/grid.hpp"
#include "rcdemand/rng.hpp"

namespace rcd {

class CoefficientDensity {
 public:
  enum class Kind { point_mass, gaussian, mixture, grid };

  static CoefficientDensity point_mass(Eigen::VectorXd v);
  // Covariance may be positive semidefinite; zero-variance directions give
  // degenerate (point-mass-like) components.
  static CoefficientDensity gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov);
  // Mixture of point-mass or Gaussian components.
  static CoefficientDensity mixture(std::vector<double> weights,
                                    std::vector<CoefficientDensity> comps);
  // Lattice density; mass must equal 1 within tol (no silent renormalizing).
  static CoefficientDensity from_grid(DensityGrid g, double mass_tol = 1e-6);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }

  // Density value; config error for families with atoms (point mass, or
  // mixtures containing point masses).
  double pdf(const Eigen::VectorXd& x) const;

  // Draw with the given index from the stream; each draw consumes a counter
  // block of size draw_stride().
  void sample(const Stream& st, std::uint64_t index, double* out) const;
  int draw_stride() const;

  // Quasi-random draw (Halton sequence, 1-based index); point-mass and
  // Gaussian families only.
  void sample_qmc(std::uint64_t index, double* out) const;

  // Law of the projection w'theta for nonzero direction w.
  // projection_pdf is the hyperplane integral of the density (exact for
  // point-free families, quadrature for grids); projection_cdf is
  // P(w'theta <= u).
  double projection_pdf(const Eigen::VectorXd& w, double u) const;
  double projection_cdf(const Eigen::VectorXd& w, double u) const;
  bool has_projection_cdf() const;

  // Characteristic function E[exp(i t theta)] for one-dimensional densities.
  std::complex<double> cf(double t) const;

  // Family accessors (config error when the family does not match).
  const Eigen::VectorXd& mean() const;
  const Eigen::MatrixXd& cov() const;
  const Eigen::VectorXd& point() const;
  const std::vector<double>& weights() const;
  const std::vector<CoefficientDensity>& components() const;
  const DensityGrid& grid() const;

 private:
  CoefficientDensity() = default;

  Kind kind_ = Kind::point_mass;
  int dim_ = 0;

  // point mass / gaussian
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;  // factor with chol_ chol_' = cov_
  bool singular_ = false;
  // mixture
  std::vector<double> weights_;
  std::vector<CoefficientDensity> comps_;
  std::vector<double> cum_weights_;
  // grid
  std::shared_ptr<DensityGrid> grid_;
  std::vector<double> cell_cdf_;  // cumulative cell masses for sampling
};

}  // namespace rcd
