#include "rcdemand/grid.hpp"

#include <cmath>

#include "rcdemand/common.hpp"

namespace rcd {

DensityGrid::DensityGrid(std::vector<GridAxis> axes) : axes_(std::move(axes)) {
  require_config(!axes_.empty(), "DensityGrid: needs at least one axis");
  std::int64_t n = 1;
  for (const auto& ax : axes_) {
    require_config(ax.n >= 2, "DensityGrid: axis needs >= 2 nodes");
    require_config(ax.hi > ax.lo, "DensityGrid: axis hi must exceed lo");
    n *= ax.n;
  }
  values_.assign(static_cast<size_t>(n), 0.0);
  strides_.assign(axes_.size(), 1);
  for (int d = dim() - 2; d >= 0; --d)
    strides_[d] = strides_[d + 1] * axes_[d + 1].n;
}

std::int64_t DensityGrid::flat_index(const std::vector<int>& idx) const {
  std::int64_t f = 0;
  for (int d = 0; d < dim(); ++d) f += strides_[d] * idx[d];
  return f;
}

void DensityGrid::unflatten(std::int64_t flat, std::vector<int>& idx) const {
  idx.resize(axes_.size());
  for (int d = 0; d < dim(); ++d) {
    idx[d] = static_cast<int>(flat / strides_[d]);
    flat %= strides_[d];
  }
}

void DensityGrid::node(std::int64_t flat, double* out) const {
  for (int d = 0; d < dim(); ++d) {
    int i = static_cast<int>(flat / strides_[d]);
    flat %= strides_[d];
    out[d] = axes_[d].node(i);
  }
}

double DensityGrid::quad_weight(std::int64_t flat) const {
  double w = 1.0;
  for (int d = 0; d < dim(); ++d) {
    int i = static_cast<int>(flat / strides_[d]);
    flat %= strides_[d];
    double h = axes_[d].step();
    w *= (i == 0 || i == axes_[d].n - 1) ? 0.5 * h : h;
  }
  return w;
}

double DensityGrid::mass() const {
  double m = 0.0;
  for (std::int64_t i = 0; i < size(); ++i) m += values_[i] * quad_weight(i);
  return m;
}

double DensityGrid::interp(const double* x) const {
  int d = dim();
  int base[8];
  double frac[8];
  require_config(d <= 8, "DensityGrid: dimension too large");
  for (int k = 0; k < d; ++k) {
    const GridAxis& ax = axes_[k];
    double t = (x[k] - ax.lo) / ax.step();
    if (t < 0.0 || t > ax.n - 1) return 0.0;
    int i = static_cast<int>(t);
    if (i >= ax.n - 1) i = ax.n - 2;
    base[k] = i;
    frac[k] = t - i;
  }
  double acc = 0.0;
  for (int corner = 0; corner < (1 << d); ++corner) {
    double w = 1.0;
    std::int64_t f = 0;
    for (int k = 0; k < d; ++k) {
      int hi = (corner >> k) & 1;
      w *= hi ? frac[k] : 1.0 - frac[k];
      f += strides_[k] * (base[k] + hi);
    }
    acc += w * values_[f];
  }
  return acc;
}

void DensityGrid::normalize() {
  double m = mass();
  require_numerical(m > 0.0, "DensityGrid::normalize: nonpositive mass");
  for (auto& v : values_) v /= m;
}

double DensityGrid::clip_negative() {
  double clipped = 0.0;
  for (std::int64_t i = 0; i < size(); ++i) {
    if (values_[i] < 0.0) {
      clipped -= values_[i] * quad_weight(i);
      values_[i] = 0.0;
    }
  }
  return clipped;
}

}  // namespace rcd
