#include "rcdemand/density.hpp"

#include <algorithm>
#include <cmath>

#include "rcdemand/common.hpp"
#include "rcdemand/normal.hpp"

namespace rcd {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

CoefficientDensity CoefficientDensity::point_mass(Eigen::VectorXd v) {
  require_config(v.size() > 0, "point_mass: empty vector");
  CoefficientDensity d;
  d.kind_ = Kind::point_mass;
  d.dim_ = static_cast<int>(v.size());
  d.mean_ = std::move(v);
  return d;
}

CoefficientDensity CoefficientDensity::gaussian(Eigen::VectorXd mean,
                                                Eigen::MatrixXd cov) {
  require_config(mean.size() > 0, "gaussian: empty mean");
  require_config(cov.rows() == mean.size() && cov.cols() == mean.size(),
                 "gaussian: covariance shape mismatch");
  CoefficientDensity d;
  d.kind_ = Kind::gaussian;
  d.dim_ = static_cast<int>(mean.size());
  d.mean_ = std::move(mean);
  d.cov_ = std::move(cov);
  require_config(d.cov_.isApprox(d.cov_.transpose(), 1e-12),
                 "gaussian: covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(d.cov_);
  if (llt.info() == Eigen::Success) {
    d.chol_ = llt.matrixL();
  } else {
    // Semidefinite covariance: factor through the spectral square root so
    // that zero-variance directions degenerate cleanly.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.cov_);
    double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    require_config(es.eigenvalues().minCoeff() >= -1e-12 * scale,
                   "gaussian: covariance must be positive semidefinite");
    d.chol_ = es.eigenvectors() *
              es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    d.singular_ = true;
  }
  return d;
}

CoefficientDensity CoefficientDensity::mixture(
    std::vector<double> weights, std::vector<CoefficientDensity> comps) {
  require_config(!comps.empty() && weights.size() == comps.size(),
                 "mixture: weights/components mismatch");
  double sum = 0.0;
  for (double w : weights) {
    require_config(w >= 0.0, "mixture: negative weight");
    sum += w;
  }
  require_config(std::abs(sum - 1.0) <= 1e-9, "mixture: weights must sum to 1");
  int dim = comps[0].dim();
  for (const auto& c : comps) {
    require_config(c.dim() == dim, "mixture: component dimension mismatch");
    require_config(
        c.kind() == Kind::point_mass || c.kind() == Kind::gaussian,
        "mixture: components must be point masses or Gaussians");
  }
  CoefficientDensity d;
  d.kind_ = Kind::mixture;
  d.dim_ = dim;
  d.weights_ = std::move(weights);
  d.comps_ = std::move(comps);
  d.cum_weights_.resize(d.weights_.size());
  double acc = 0.0;
  for (size_t i = 0; i < d.weights_.size(); ++i) {
    acc += d.weights_[i];
    d.cum_weights_[i] = acc;
  }
  d.cum_weights_.back() = 1.0;
  return d;
}

CoefficientDensity CoefficientDensity::from_grid(DensityGrid g,
                                                 double mass_tol) {
  double m = g.mass();
  require_config(std::abs(m - 1.0) <= mass_tol,
                 "from_grid: lattice mass deviates from 1 beyond tolerance");
  CoefficientDensity d;
  d.kind_ = Kind::grid;
  d.dim_ = g.dim();
  d.grid_ = std::make_shared<DensityGrid>(std::move(g));

  // Cell masses (integral of the multilinear interpolant over each cell =
  // cell volume times the mean of its corner values), accumulated for
  // inverse-CDF sampling.  Negative corners contribute zero.
  const DensityGrid& gr = *d.grid_;
  int dim = gr.dim();
  std::vector<int> cells(dim);
  std::int64_t n_cells = 1;
  for (int k = 0; k < dim; ++k) {
    cells[k] = gr.axis(k).n - 1;
    n_cells *= cells[k];
  }
  double vol = 1.0;
  for (int k = 0; k < dim; ++k) vol *= gr.axis(k).step();
  d.cell_cdf_.resize(static_cast<size_t>(n_cells));
  std::vector<int> idx(dim);
  double acc = 0.0;
  for (std::int64_t c = 0; c < n_cells; ++c) {
    std::int64_t rem = c;
    for (int k = dim - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(rem % cells[k]);
      rem /= cells[k];
    }
    double corner_sum = 0.0;
    for (int corner = 0; corner < (1 << dim); ++corner) {
      std::vector<int> node_idx(dim);
      for (int k = 0; k < dim; ++k)
        node_idx[k] = idx[k] + ((corner >> k) & 1);
      corner_sum += std::max(0.0, gr[gr.flat_index(node_idx)]);
    }
    double cell_mass = vol * corner_sum / (1 << dim);
    acc += cell_mass;
    d.cell_cdf_[static_cast<size_t>(c)] = acc;
  }
  require_numerical(acc > 0.0, "from_grid: no positive mass to sample");
  for (auto& v : d.cell_cdf_) v /= acc;
  return d;
}

double CoefficientDensity::pdf(const Eigen::VectorXd& x) const {
  require_config(x.size() == dim_, "pdf: dimension mismatch");
  switch (kind_) {
    case Kind::point_mass:
      throw_config("pdf: undefined for point-mass densities");
    case Kind::gaussian: {
      require_numerical(!singular_,
                        "pdf: degenerate Gaussian has no Lebesgue density");
      Eigen::VectorXd z = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
      double logdet = 0.0;
      for (int i = 0; i < dim_; ++i) logdet += std::log(chol_(i, i));
      return std::exp(-0.5 * z.squaredNorm() - logdet -
                      0.5 * dim_ * std::log(kTwoPi));
    }
    case Kind::mixture: {
      double acc = 0.0;
      for (size_t i = 0; i < comps_.size(); ++i)
        acc += weights_[i] * comps_[i].pdf(x);
      return acc;
    }
    case Kind::grid:
      return grid_->interp(x.data());
  }
  throw_config("pdf: unreachable");
}

int CoefficientDensity::draw_stride() const {
  switch (kind_) {
    case Kind::point_mass:
      return 1;
    case Kind::gaussian:
      return dim_;
    case Kind::mixture: {
      int m = 0;
      for (const auto& c : comps_) m = std::max(m, c.draw_stride());
      return 1 + m;
    }
    case Kind::grid:
      return 1 + dim_;
  }
  return 1;
}

void CoefficientDensity::sample(const Stream& st, std::uint64_t index,
                                double* out) const {
  const std::uint64_t base = index * static_cast<std::uint64_t>(draw_stride());
  switch (kind_) {
    case Kind::point_mass:
      for (int i = 0; i < dim_; ++i) out[i] = mean_[i];
      return;
    case Kind::gaussian: {
      Eigen::VectorXd z(dim_);
      for (int i = 0; i < dim_; ++i) z[i] = st.normal(base + i);
      Eigen::Map<Eigen::VectorXd>(out, dim_) = mean_ + chol_ * z;
      return;
    }
    case Kind::mixture: {
      double u = st.uniform(base);
      size_t c = std::lower_bound(cum_weights_.begin(), cum_weights_.end(), u) -
                 cum_weights_.begin();
      if (c >= comps_.size()) c = comps_.size() - 1;
      // Delegate with a shifted counter block so that components never share
      // counters with the selector.
      Stream sub(st.bits(base) ^ 0x5bf03635a1aULL, 17);
      comps_[c].sample(sub, 0, out);
      return;
    }
    case Kind::grid: {
      double u = st.uniform(base);
      size_t c = std::lower_bound(cell_cdf_.begin(), cell_cdf_.end(), u) -
                 cell_cdf_.begin();
      if (c >= cell_cdf_.size()) c = cell_cdf_.size() - 1;
      const DensityGrid& gr = *grid_;
      int dim = gr.dim();
      std::int64_t rem = static_cast<std::int64_t>(c);
      for (int k = dim - 1; k >= 0; --k) {
        int nk = gr.axis(k).n - 1;
        int ik = static_cast<int>(rem % nk);
        rem /= nk;
        double t = st.uniform(base + 1 + k);
        out[k] = gr.axis(k).node(ik) + t * gr.axis(k).step();
      }
      return;
    }
  }
}

void CoefficientDensity::sample_qmc(std::uint64_t index, double* out) const {
  switch (kind_) {
    case Kind::point_mass:
      for (int i = 0; i < dim_; ++i) out[i] = mean_[i];
      return;
    case Kind::gaussian: {
      Eigen::VectorXd z(dim_);
      halton_normal(index, dim_, z.data());
      Eigen::Map<Eigen::VectorXd>(out, dim_) = mean_ + chol_ * z;
      return;
    }
    default:
      throw_config(
          "sample_qmc: only point-mass and Gaussian families support "
          "quasi-random draws");
  }
}

bool CoefficientDensity::has_projection_cdf() const {
  return kind_ != Kind::grid;
}

double CoefficientDensity::projection_pdf(const Eigen::VectorXd& w,
                                          double u) const {
  require_config(w.size() == dim_, "projection_pdf: dimension mismatch");
  double nw = w.norm();
  require_config(nw > 0.0, "projection_pdf: zero direction");
  switch (kind_) {
    case Kind::point_mass:
      throw_config("projection_pdf: undefined for point-mass densities");
    case Kind::gaussian: {
      double m = w.dot(mean_);
      double v = w.dot(cov_ * w);
      require_numerical(v > 0.0, "projection_pdf: degenerate projection");
      double s = std::sqrt(v);
      return norm_pdf((u - m) / s) / s;
    }
    case Kind::mixture: {
      double acc = 0.0;
      for (size_t i = 0; i < comps_.size(); ++i)
        acc += weights_[i] * comps_[i].projection_pdf(w, u);
      return acc;
    }
    case Kind::grid: {
      // Quadrature over the hyperplane w'x = u through the lattice box.
      const DensityGrid& gr = *grid_;
      int d = dim_;
      Eigen::VectorXd wh = w / nw;
      double uh = u / nw;
      // Half-diagonal of the box gives the integration extent.
      double R = 0.0;
      for (int k = 0; k < d; ++k) {
        double half = 0.5 * (gr.axis(k).hi - gr.axis(k).lo);
        R += half * half;
      }
      R = std::sqrt(R);
      double h = gr.axis(0).step();
      for (int k = 1; k < d; ++k) h = std::min(h, gr.axis(k).step());
      h *= 0.5;
      // Center of the box projected on the hyperplane keeps the quadrature
      // window tight.
      Eigen::VectorXd center(d);
      for (int k = 0; k < d; ++k)
        center[k] = 0.5 * (gr.axis(k).lo + gr.axis(k).hi);
      Eigen::VectorXd origin = center + (uh - wh.dot(center)) * wh;
      if (d == 1) return gr.interp(&uh) / nw;
      // Orthonormal basis of the complement via full QR of wh.
      Eigen::MatrixXd Q =
          Eigen::HouseholderQR<Eigen::MatrixXd>(wh).householderQ();
      int nt = static_cast<int>(std::ceil(2.0 * R / h));
      double acc = 0.0;
      Eigen::VectorXd x(d);
      if (d == 2) {
        Eigen::VectorXd v1 = Q.col(1);
        for (int i = 0; i < nt; ++i) {
          double t = -R + (i + 0.5) * (2.0 * R / nt);
          x = origin + t * v1;
          acc += gr.interp(x.data());
        }
        return acc * (2.0 * R / nt) / nw;
      }
      require_config(d == 3, "projection_pdf: grid supports dim <= 3");
      Eigen::VectorXd v1 = Q.col(1), v2 = Q.col(2);
      double step = 2.0 * R / nt;
      for (int i = 0; i < nt; ++i) {
        double t1 = -R + (i + 0.5) * step;
        Eigen::VectorXd base = origin + t1 * v1;
        for (int j = 0; j < nt; ++j) {
          double t2 = -R + (j + 0.5) * step;
          x = base + t2 * v2;
          acc += gr.interp(x.data());
        }
      }
      return acc * step * step / nw;
    }
  }
  throw_config("projection_pdf: unreachable");
}

double CoefficientDensity::projection_cdf(const Eigen::VectorXd& w,
                                          double u) const {
  require_config(w.size() == dim_, "projection_cdf: dimension mismatch");
  switch (kind_) {
    case Kind::point_mass:
      return w.dot(mean_) <= u ? 1.0 : 0.0;
    case Kind::gaussian: {
      double m = w.dot(mean_);
      double v = w.dot(cov_ * w);
      if (v <= 0.0) return m <= u ? 1.0 : 0.0;
      return norm_cdf((u - m) / std::sqrt(v));
    }
    case Kind::mixture: {
      double acc = 0.0;
      for (size_t i = 0; i < comps_.size(); ++i)
        acc += weights_[i] * comps_[i].projection_cdf(w, u);
      return acc;
    }
    case Kind::grid:
      throw_config("projection_cdf: not available for grid densities");
  }
  throw_config("projection_cdf: unreachable");
}

std::complex<double> CoefficientDensity::cf(double t) const {
  require_config(dim_ == 1, "cf: only one-dimensional densities");
  const std::complex<double> I(0.0, 1.0);
  switch (kind_) {
    case Kind::point_mass:
      return std::exp(I * (t * mean_[0]));
    case Kind::gaussian:
      return std::exp(I * (t * mean_[0]) - 0.5 * t * t * cov_(0, 0));
    case Kind::mixture: {
      std::complex<double> acc(0.0, 0.0);
      for (size_t i = 0; i < comps_.size(); ++i)
        acc += weights_[i] * comps_[i].cf(t);
      return acc;
    }
    case Kind::grid: {
      const DensityGrid& gr = *grid_;
      std::complex<double> acc(0.0, 0.0);
      for (std::int64_t i = 0; i < gr.size(); ++i) {
        double x = gr.axis(0).node(static_cast<int>(i));
        acc += gr.quad_weight(i) * gr[i] * std::exp(I * (t * x));
      }
      return acc;
    }
  }
  throw_config("cf: unreachable");
}

const Eigen::VectorXd& CoefficientDensity::mean() const {
  require_config(kind_ == Kind::gaussian || kind_ == Kind::point_mass,
                 "mean: family has no mean vector");
  return mean_;
}

const Eigen::MatrixXd& CoefficientDensity::cov() const {
  require_config(kind_ == Kind::gaussian, "cov: not a Gaussian");
  return cov_;
}

const Eigen::VectorXd& CoefficientDensity::point() const {
  require_config(kind_ == Kind::point_mass, "point: not a point mass");
  return mean_;
}

const std::vector<double>& CoefficientDensity::weights() const {
  require_config(kind_ == Kind::mixture, "weights: not a mixture");
  return weights_;
}

const std::vector<CoefficientDensity>& CoefficientDensity::components() const {
  require_config(kind_ == Kind::mixture, "components: not a mixture");
  return comps_;
}

const DensityGrid& CoefficientDensity::grid() const {
  require_config(kind_ == Kind::grid, "grid: not a grid density");
  return *grid_;
}

}  // namespace rcd
