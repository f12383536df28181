// Uniform rectangular lattices holding sampled density values, with
// trapezoid quadrature and multilinear interpolation.

#pragma once

#include <cstdint>
#include <vector>

namespace rcd {

struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  int n = 2;  // number of nodes (>= 2)

  double step() const { return (hi - lo) / (n - 1); }
  double node(int i) const { return lo + step() * i; }
};

class DensityGrid {
 public:
  DensityGrid() = default;
  explicit DensityGrid(std::vector<GridAxis> axes);

  int dim() const { return static_cast<int>(axes_.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }
  const std::vector<GridAxis>& axes() const { return axes_; }
  const GridAxis& axis(int d) const { return axes_[d]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::int64_t i) const { return values_[i]; }
  double& operator[](std::int64_t i) { return values_[i]; }

  // Row-major flattening, last axis fastest.
  std::int64_t flat_index(const std::vector<int>& idx) const;
  void unflatten(std::int64_t flat, std::vector<int>& idx) const;
  void node(std::int64_t flat, double* out) const;

  // Trapezoid quadrature weight of a node (product of axis steps, halved at
  // axis endpoints).
  double quad_weight(std::int64_t flat) const;
  double mass() const;

  // Multilinear interpolation; zero outside the lattice box.
  double interp(const double* x) const;

  // Scale values so that mass() == 1.  Errors if mass is not positive.
  void normalize();

  // Clip negative values to zero (returns clipped mass) without renormalizing.
  double clip_negative();

 private:
  std::vector<GridAxis> axes_;
  std::vector<double> values_;
  std::vector<std::int64_t> strides_;
};

}  // namespace rcd
