// Nonparametric instrumental-variables regression with Tikhonov (ridge)
// regularization: recover the inverse-share function psi from the moment
// restriction E[psi(endogenous) - response | instruments] = 0.  Both sides
// are expanded in tensor-product cubic B-spline bases; a first-stage least
// squares projects the endogenous basis onto the instrument span, and the
// second stage solves the penalized normal equations.  An optional cone
// constraint keeps psi nondecreasing in its last argument by restricting
// the spline coefficients to be nondecreasing along the last tensor
// dimension (a sufficient condition), solved by projected gradient descent
// with a pool-adjacent-violators projection.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "rcdemand/common.hpp"

namespace rcd {

// Clamped cubic B-splines on [lo, hi] with n_segments uniform segments;
// size() = n_segments + 3 basis functions.  Evaluation outside [lo, hi]
// clamps to the boundary.
struct BSplineBasis {
  double lo = 0.0;
  double hi = 1.0;
  int n_segments = 4;

  int size() const { return n_segments + 3; }
  // Values of the four basis functions supported at x; `first` receives the
  // index of the first one.
  void eval(double x, int& first, std::array<double, 4>& values) const;
  // Greville abscissa of basis function k: coefficients c_k = a*greville(k)+b
  // reproduce the linear function a*x+b exactly.
  double greville(int k) const;
  void validate() const;
};

// Tensor product over several axes, flattened row-major with the last axis
// fastest (matching DensityGrid).
struct TensorBSpline {
  std::vector<BSplineBasis> axes;

  int dim() const { return static_cast<int>(axes.size()); }
  int size() const;
  std::vector<int> sizes() const;
  // Dense row of all basis values at x (size() entries).
  Eigen::VectorXd row(const Eigen::VectorXd& x) const;
  double value(const Eigen::VectorXd& coef, const Eigen::VectorXd& x) const;
  void validate() const;
};

// Discretized conditional-expectation operator, its response, and the
// regularization choices.
struct NpivProblem {
  Eigen::MatrixXd op;           // instrument-projected basis design
  Eigen::VectorXd response;     // instrument-projected response
  double alpha = 0.0;           // Tikhonov weight, >= 0
  bool monotone = false;        // nondecreasing-in-last-argument cone
  std::vector<int> tensor_dims; // per-axis basis sizes; needed when monotone
  int max_iterations = 5000;    // projected gradient budget (monotone path)
  double tol = 1e-12;           // projected gradient step-size stop rule
  void validate() const;
};

struct NpivFit {
  Eigen::VectorXd coef;
  double residual_norm = 0.0;  // ||op * coef - response||
  double objective = 0.0;      // residual^2 + alpha * ||coef||^2
  int iterations = 0;          // 0 on the closed-form path
};

// First-stage projection onto the instrument basis span (rank-safe QR),
// second-stage operator assembly.  Rows of `endogenous` / `instruments`
// are observations; x1 is the response the moment condition centers on.
NpivProblem build_npiv_problem(const Eigen::MatrixXd& endogenous,
                               const Eigen::VectorXd& x1,
                               const Eigen::MatrixXd& instruments,
                               const TensorBSpline& basis,
                               const TensorBSpline& instrument_basis);

// Minimize ||op c - response||^2 + alpha ||c||^2, optionally over the
// monotone coefficient cone.  Numerical error if the normal equations are
// singular at alpha = 0 (the message says to set alpha > 0).
NpivFit npiv_fit(const NpivProblem& problem);

}  // namespace rcd
