// rcdemand — market-level demand from heterogeneous random-coefficient
// discrete-choice models: simulation, share inversion, density recovery.
//
// Tensor-product cubic B-splines, the two-stage instrument projection, and
// the Tikhonov-regularized fit with an optional monotone coefficient cone.

#include "rcdemand/npiv.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace rcd {

namespace {

constexpr int kDegree = 3;

// Padded clamped knot vector: lo repeated degree+1 times, uniform interior
// knots, hi repeated degree+1 times.
std::vector<double> clamped_knots(const BSplineBasis& basis) {
  std::vector<double> t;
  t.reserve(basis.n_segments + 2 * kDegree + 1);
  for (int i = 0; i < kDegree; ++i) t.push_back(basis.lo);
  const double step = (basis.hi - basis.lo) / basis.n_segments;
  for (int i = 0; i <= basis.n_segments; ++i)
    t.push_back(basis.lo + step * i);
  for (int i = 0; i < kDegree; ++i) t.push_back(basis.hi);
  return t;
}

// Isotonic (nondecreasing) least-squares projection with unit weights:
// pool adjacent violators.
void pava_nondecreasing(double* v, int n) {
  std::vector<double> value(n);
  std::vector<int> count(n);
  int blocks = 0;
  for (int i = 0; i < n; ++i) {
    value[blocks] = v[i];
    count[blocks] = 1;
    ++blocks;
    while (blocks > 1 && value[blocks - 2] > value[blocks - 1]) {
      const int c = count[blocks - 2] + count[blocks - 1];
      value[blocks - 2] = (value[blocks - 2] * count[blocks - 2] +
                           value[blocks - 1] * count[blocks - 1]) /
                          c;
      count[blocks - 2] = c;
      --blocks;
    }
  }
  int i = 0;
  for (int b = 0; b < blocks; ++b)
    for (int k = 0; k < count[b]; ++k) v[i++] = value[b];
}

// Project coefficients onto the cone "nondecreasing along the last tensor
// dimension": PAVA per contiguous line.
void project_monotone(Eigen::VectorXd& coef, const std::vector<int>& dims) {
  const int line = dims.back();
  const int n_lines = static_cast<int>(coef.size()) / line;
  for (int l = 0; l < n_lines; ++l)
    pava_nondecreasing(coef.data() + static_cast<std::ptrdiff_t>(l) * line,
                       line);
}

}  // namespace

void BSplineBasis::validate() const {
  require_config(hi > lo, "bspline: interval must be increasing");
  require_config(n_segments >= 1, "bspline: need at least one segment");
}

void BSplineBasis::eval(double x, int& first,
                        std::array<double, 4>& values) const {
  validate();
  x = std::clamp(x, lo, hi);
  const std::vector<double> t = clamped_knots(*this);
  // Span index: largest i with t[i] <= x < t[i+1]; the last segment owns hi.
  const double step = (hi - lo) / n_segments;
  int seg = static_cast<int>((x - lo) / step);
  seg = std::clamp(seg, 0, n_segments - 1);
  const int span = seg + kDegree;  // index into the padded knot vector

  std::array<double, kDegree + 1> left{}, right{};
  values = {1.0, 0.0, 0.0, 0.0};
  for (int j = 1; j <= kDegree; ++j) {
    left[j] = x - t[span + 1 - j];
    right[j] = t[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = values[r] / (right[r + 1] + left[j - r]);
      values[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    values[j] = saved;
  }
  first = span - kDegree;
}

double BSplineBasis::greville(int k) const {
  validate();
  require_config(k >= 0 && k < size(), "bspline: basis index range");
  const std::vector<double> t = clamped_knots(*this);
  return (t[k + 1] + t[k + 2] + t[k + 3]) / 3.0;
}

void TensorBSpline::validate() const {
  require_config(!axes.empty(), "tensor bspline: no axes");
  for (const BSplineBasis& b : axes) b.validate();
}

int TensorBSpline::size() const {
  int n = 1;
  for (const BSplineBasis& b : axes) n *= b.size();
  return n;
}

std::vector<int> TensorBSpline::sizes() const {
  std::vector<int> out;
  out.reserve(axes.size());
  for (const BSplineBasis& b : axes) out.push_back(b.size());
  return out;
}

Eigen::VectorXd TensorBSpline::row(const Eigen::VectorXd& x) const {
  validate();
  require_config(static_cast<int>(x.size()) == dim(),
                 "tensor bspline: point dimension mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
  std::vector<int> first(dim());
  std::vector<std::array<double, 4>> vals(dim());
  for (int d = 0; d < dim(); ++d) axes[d].eval(x[d], first[d], vals[d]);

  // Walk the 4^dim nonzero tensor combinations.
  std::vector<int> pick(dim(), 0);
  while (true) {
    double prod = 1.0;
    int flat = 0;
    for (int d = 0; d < dim(); ++d) {
      prod *= vals[d][pick[d]];
      flat = flat * axes[d].size() + (first[d] + pick[d]);
    }
    out[flat] += prod;
    int d = dim() - 1;
    while (d >= 0 && ++pick[d] == kDegree + 1) pick[d--] = 0;
    if (d < 0) break;
  }
  return out;
}

double TensorBSpline::value(const Eigen::VectorXd& coef,
                            const Eigen::VectorXd& x) const {
  require_config(static_cast<int>(coef.size()) == size(),
                 "tensor bspline: coefficient length mismatch");
  return row(x).dot(coef);
}

void NpivProblem::validate() const {
  require_config(op.rows() > 0 && op.cols() > 0,
                 "npiv: empty operator matrix");
  require_config(response.size() == op.rows(),
                 "npiv: response length must match operator rows");
  require_config(alpha >= 0.0, "npiv: alpha must be >= 0");
  if (monotone) {
    require_config(!tensor_dims.empty(),
                   "npiv: monotone cone needs the tensor dimensions");
    int n = 1;
    for (int d : tensor_dims) {
      require_config(d >= 1, "npiv: tensor dimensions must be positive");
      n *= d;
    }
    require_config(n == op.cols(),
                   "npiv: tensor dimensions must multiply to the coefficient "
                   "count");
  }
  require_config(max_iterations >= 1 && tol > 0.0,
                 "npiv: bad iteration controls");
}

NpivProblem build_npiv_problem(const Eigen::MatrixXd& endogenous,
                               const Eigen::VectorXd& x1,
                               const Eigen::MatrixXd& instruments,
                               const TensorBSpline& basis,
                               const TensorBSpline& instrument_basis) {
  basis.validate();
  instrument_basis.validate();
  const int n = static_cast<int>(endogenous.rows());
  require_config(n > 0, "npiv: no observations");
  require_config(x1.size() == n && instruments.rows() == n,
                 "npiv: observation counts must agree");
  require_config(static_cast<int>(endogenous.cols()) == basis.dim(),
                 "npiv: endogenous columns must match the basis dimension");
  require_config(
      static_cast<int>(instruments.cols()) == instrument_basis.dim(),
      "npiv: instrument columns must match the instrument basis dimension");

  Eigen::MatrixXd B(n, basis.size());
  Eigen::MatrixXd A(n, instrument_basis.size());
  for (int i = 0; i < n; ++i) {
    B.row(i) = basis.row(endogenous.row(i).transpose()).transpose();
    A.row(i) = instrument_basis.row(instruments.row(i).transpose()).transpose();
  }
  // First stage: fitted values of every basis column (and the response) on
  // the instrument span; rank-revealing QR keeps collinear instrument bases
  // harmless.
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  NpivProblem problem;
  problem.op = A * qr.solve(B);
  problem.response = A * qr.solve(x1);
  problem.tensor_dims = basis.sizes();
  return problem;
}

NpivFit npiv_fit(const NpivProblem& problem) {
  problem.validate();
  const Eigen::MatrixXd& T = problem.op;
  const Eigen::VectorXd& y = problem.response;
  const int K = static_cast<int>(T.cols());
  const Eigen::MatrixXd G = T.transpose() * T;
  const Eigen::VectorXd b = T.transpose() * y;

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  const double lam_max = eig.eigenvalues().maxCoeff();
  const double lam_min = eig.eigenvalues().minCoeff();
  if (problem.alpha == 0.0)
    require_numerical(lam_min > 1e-12 * std::max(1.0, lam_max),
                      "npiv: singular normal equations at alpha = 0; set "
                      "alpha > 0");

  Eigen::MatrixXd M = G;
  M.diagonal().array() += problem.alpha;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  Eigen::VectorXd coef = ldlt.solve(b);

  NpivFit fit;
  if (problem.monotone) {
    // Projected gradient on the strongly convex objective, warm-started at
    // the projected unconstrained solution.
    project_monotone(coef, problem.tensor_dims);
    const double lipschitz = 2.0 * (lam_max + problem.alpha);
    const double step = 1.0 / lipschitz;
    for (int it = 1; it <= problem.max_iterations; ++it) {
      const Eigen::VectorXd grad =
          2.0 * (G * coef - b + problem.alpha * coef);
      Eigen::VectorXd next = coef - step * grad;
      project_monotone(next, problem.tensor_dims);
      const double move = (next - coef).lpNorm<Eigen::Infinity>();
      coef = next;
      fit.iterations = it;
      if (move <= problem.tol * std::max(1.0, coef.lpNorm<Eigen::Infinity>()))
        break;
    }
  }
  fit.coef = coef;
  fit.residual_norm = (T * coef - y).norm();
  fit.objective = fit.residual_norm * fit.residual_norm +
                  problem.alpha * coef.squaredNorm();
  return fit;
}

}  // namespace rcd
