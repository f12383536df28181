#include "rcdemand/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "rcdemand/common.hpp"

namespace rcd {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;

}  // namespace

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double norm_quantile(double p) {
  require_config(p > 0.0 && p < 1.0, "norm_quantile: p must lie in (0,1)");
  // Acklam's approximation (relative error ~1.15e-9).
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley refinement using the exact CDF.
  double e = norm_cdf(x) - p;
  double u = e * std::sqrt(kTwoPi) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

const GaussLegendre& gauss_legendre(int n) {
  static std::map<int, GaussLegendre> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GaussLegendre gl;
  gl.x.resize(n);
  gl.w.resize(n);
  // Newton iteration on Legendre polynomials, Chebyshev initial guess.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    gl.x[i] = -x;
    gl.x[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    gl.w[i] = w;
    gl.w[n - 1 - i] = w;
  }
  auto [pos, ok] = cache.emplace(n, std::move(gl));
  (void)ok;
  return pos->second;
}

namespace {

// Integrand of Plackett's identity at correlation sin(t).
inline double plackett_integrand(double t, double h, double k) {
  double ct = std::cos(t);
  double st = std::sin(t);
  return std::exp(-(h * h - 2.0 * h * k * st + k * k) / (2.0 * ct * ct));
}

double plackett_panel(double t0, double t1, double h, double k, int n) {
  const GaussLegendre& gl = gauss_legendre(n);
  double mid = 0.5 * (t0 + t1);
  double half = 0.5 * (t1 - t0);
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    s += gl.w[i] * plackett_integrand(mid + half * gl.x[i], h, k);
  return s * half;
}

}  // namespace

double bvn_cdf(double h, double k, double rho) {
  if (std::isnan(h) || std::isnan(k) || std::isnan(rho))
    throw_numerical("bvn_cdf: NaN input");
  rho = std::clamp(rho, -1.0, 1.0);
  if (h == std::numeric_limits<double>::infinity() ||
      k == std::numeric_limits<double>::infinity())
    return norm_cdf(std::min(h, k));
  if (h == -std::numeric_limits<double>::infinity() ||
      k == -std::numeric_limits<double>::infinity())
    return 0.0;
  if (rho >= 1.0 - 1e-14) return norm_cdf(std::min(h, k));
  if (rho <= -1.0 + 1e-14) return std::max(0.0, norm_cdf(h) + norm_cdf(k) - 1.0);
  if (rho == 0.0) return norm_cdf(h) * norm_cdf(k);

  // P(X<=h, Y<=k) = Phi(h)Phi(k) + (1/2pi) * int_0^{asin rho} f(t) dt.
  double T = std::asin(rho);
  double integral = 0.0;
  double ar = std::abs(rho);
  if (ar <= 0.3) {
    integral = plackett_panel(0.0, T, h, k, 6);
  } else if (ar <= 0.75) {
    integral = plackett_panel(0.0, T, h, k, 12);
  } else if (ar <= 0.925) {
    double mid = 0.5 * T;
    integral = plackett_panel(0.0, mid, h, k, 12) +
               plackett_panel(mid, T, h, k, 12);
  } else {
    // Smooth base part up to |rho| = 0.925, then panels graded toward the
    // endpoint where the integrand develops a cos^2-scale boundary layer.
    double sgn = (rho > 0.0) ? 1.0 : -1.0;
    double t0 = sgn * std::asin(0.925);
    double mid = 0.5 * t0;
    integral = plackett_panel(0.0, mid, h, k, 12) +
               plackett_panel(mid, t0, h, k, 12);
    double c_end = std::cos(T);  // in (0, cos t0]
    double c = std::cos(t0);
    double t_prev = t0;
    while (c > 2.0 * c_end) {
      c *= 0.5;
      double t_next = sgn * std::acos(c);
      integral += plackett_panel(t_prev, t_next, h, k, 16);
      t_prev = t_next;
    }
    integral += plackett_panel(t_prev, T, h, k, 16);
  }
  double p = norm_cdf(h) * norm_cdf(k) + integral / kTwoPi;
  return std::clamp(p, 0.0, 1.0);
}

double gauss_affine_cdf(double c, double a, double b) {
  // P(X <= c, Y - b X <= a): (X, Y - b X) is bivariate normal with
  // std dev (1, sqrt(1+b^2)) and correlation -b/sqrt(1+b^2).
  double s = std::sqrt(1.0 + b * b);
  return bvn_cdf(c, a / s, -b / s);
}

namespace {

// Contribution of P(x0 < X <= x1, Y <= a + bX).
inline double band_below(double x0, double x1, const AffineBound& u) {
  return gauss_affine_cdf(x1, u.a, u.b) - gauss_affine_cdf(x0, u.a, u.b);
}

}  // namespace

double gauss_envelope_prob(double lo, double hi,
                           const std::vector<AffineBound>& uppers,
                           const std::vector<AffineBound>& lowers) {
  if (!(hi > lo)) return 0.0;
  const double cap = 12.0;  // beyond +-12 sd the mass is below 1e-32
  lo = std::max(lo, -cap);
  hi = std::min(hi, cap);
  if (!(hi > lo)) return 0.0;

  // Breakpoints: all pairwise intersections of the affine bounds inside
  // [lo, hi].  Between consecutive breakpoints the active upper and lower
  // bounds (and their ordering) are fixed.
  std::vector<double> cuts{lo, hi};
  auto add_intersections = [&](const std::vector<AffineBound>& s1,
                               const std::vector<AffineBound>& s2,
                               bool same_set) {
    for (size_t i = 0; i < s1.size(); ++i) {
      for (size_t j = same_set ? i + 1 : 0; j < s2.size(); ++j) {
        double db = s1[i].b - s2[j].b;
        if (std::abs(db) < 1e-300) continue;
        double x = (s2[j].a - s1[i].a) / db;
        if (x > lo && x < hi) cuts.push_back(x);
      }
    }
  };
  add_intersections(uppers, uppers, true);
  add_intersections(lowers, lowers, true);
  add_intersections(uppers, lowers, false);
  std::sort(cuts.begin(), cuts.end());

  double prob = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    double x0 = cuts[i], x1 = cuts[i + 1];
    if (!(x1 > x0 + 1e-300)) continue;
    double xm = 0.5 * (x0 + x1);
    // Active envelope pieces at the midpoint.
    AffineBound up{cap, 0.0};
    bool has_up = false;
    for (const auto& u : uppers) {
      if (!has_up || u.a + u.b * xm < up.a + up.b * xm) up = u, has_up = true;
    }
    AffineBound low{-cap, 0.0};
    bool has_low = false;
    for (const auto& l : lowers) {
      if (!has_low || l.a + l.b * xm > low.a + low.b * xm) low = l, has_low = true;
    }
    if (has_up && has_low &&
        up.a + up.b * xm <= low.a + low.b * xm)
      continue;  // empty band on this piece
    double piece = band_below(x0, x1, up) - band_below(x0, x1, low);
    if (piece > 0.0) prob += piece;
  }
  return std::clamp(prob, 0.0, 1.0);
}

}  // namespace rcd
