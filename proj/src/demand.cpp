#include "rcdemand/demand.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <vector>

#include "rcdemand/common.hpp"
#include "rcdemand/normal.hpp"
#include "rcdemand/rng.hpp"

namespace rcd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd eps_cholesky(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  require_config(llt.info() == Eigen::Success,
                 "taste-shock covariance must be positive definite");
  return llt.matrixL();
}

// Linear representation of the menu utilities over the goods' taste shocks:
// u_a = c0[a] + g1[a]*e1 + g2[a]*e2 (quantity coefficients are integers).
struct LinearMenu {
  Eigen::VectorXd c0;
  Eigen::VectorXi g1, g2;
};

LinearMenu linear_menu(const ModelSpec& spec, const CoefficientDraw& draw,
                       const ProductMenu& menu) {
  const int J = spec.n_goods;
  Eigen::VectorXd base(J);
  for (int j = 0; j < J; ++j)
    base[j] = menu.x2.row(j).dot(draw.beta2) + draw.alpha * menu.p[j] +
              menu.delta[j];
  const int K = spec.n_alternatives();
  LinearMenu lm;
  lm.c0.setZero(K);
  lm.g1.setZero(K);
  lm.g2.setZero(K);
  switch (spec.menu) {
    case MenuKind::multinomial:
      for (int j = 0; j < J; ++j) {
        lm.c0[1 + j] = base[j];
        if (j == 0)
          lm.g1[1 + j] = 1;
        else
          lm.g2[1 + j] = 1;
      }
      break;
    case MenuKind::bundles2: {
      double d = draw.bundle_effects[0];
      lm.c0[1] = base[0];           lm.g1[1] = 1;
      lm.c0[2] = base[1];           lm.g2[2] = 1;
      lm.c0[3] = base.sum() + d;    lm.g1[3] = 1; lm.g2[3] = 1;
      break;
    }
    case MenuKind::multiunit2: {
      double d11 = draw.bundle_effects[0];
      double d20 = draw.bundle_effects[1];
      double d21 = draw.bundle_effects[2];
      lm.c0[1] = base[0];                    lm.g1[1] = 1;
      lm.c0[2] = base[1];                    lm.g2[2] = 1;
      lm.c0[3] = base.sum() + d11;           lm.g1[3] = 1; lm.g2[3] = 1;
      lm.c0[4] = 2.0 * base[0] + d20;        lm.g1[4] = 2;
      lm.c0[5] = 2.0 * base[0] + base[1] + d21;  lm.g1[5] = 2; lm.g2[5] = 1;
      break;
    }
  }
  return lm;
}

// P(alternative a maximizes utility) for jointly normal taste shocks with
// Cholesky factor L (e1 = L00 Z1, e2 = L10 Z1 + L11 Z2).
double normal_alt_probability(const LinearMenu& lm, int a,
                              const Eigen::MatrixXd& L) {
  const double L00 = L(0, 0);
  const double L10 = L.rows() > 1 ? L(1, 0) : 0.0;
  const double L11 = L.rows() > 1 ? L(1, 1) : 0.0;
  double lo = -kInf, hi = kInf;
  std::vector<AffineBound> uppers, lowers;
  for (int b = 0; b < lm.c0.size(); ++b) {
    if (b == a) continue;
    double A = lm.c0[a] - lm.c0[b];
    int k1 = lm.g1[a] - lm.g1[b];
    int k2 = lm.g2[a] - lm.g2[b];
    double B = k1 * L00 + k2 * L10;
    double G = k2 * L11;
    if (k2 == 0 || G == 0.0) {
      if (B > 0.0)
        lo = std::max(lo, -A / B);
      else if (B < 0.0)
        hi = std::min(hi, -A / B);
      else if (A <= 0.0)
        return 0.0;  // constant constraint fails (ties have measure zero)
    } else if (G > 0.0) {
      lowers.push_back({-A / G, -B / G});
    } else {
      uppers.push_back({A / (-G), B / (-G)});
    }
  }
  return gauss_envelope_prob(lo, hi, uppers, lowers);
}

Eigen::VectorXd normal_menu_probs(const ModelSpec& spec,
                                  const CoefficientDraw& draw,
                                  const ProductMenu& menu,
                                  const Eigen::MatrixXd& L) {
  LinearMenu lm = linear_menu(spec, draw, menu);
  Eigen::VectorXd probs(spec.n_alternatives());
  for (int a = 0; a < probs.size(); ++a)
    probs[a] = normal_alt_probability(lm, a, L);
  return probs;
}

// ---------------------------------------------------------------------------
// Pure-characteristics smoothing: integrate the price coefficient alpha
// conditional on beta2 in closed form.  The winning region of each good is an
// interval in alpha, so conditional shares are differences of normal CDFs.

struct AlphaConditional {
  // beta2 marginal: b = mean_b + chol_b * z;  alpha | b ~ N(m(b), sd^2).
  Eigen::VectorXd mean_b;
  Eigen::MatrixXd chol_b;
  Eigen::RowVectorXd slope;  // m(b) = mean_a + slope * (b - mean_b)
  double mean_a = 0.0;
  double sd = 0.0;
};

AlphaConditional alpha_conditional(const Eigen::VectorXd& mean,
                                   const Eigen::MatrixXd& cov) {
  const int db = static_cast<int>(mean.size()) - 1;
  AlphaConditional c;
  c.mean_b = mean.head(db);
  c.mean_a = mean[db];
  Eigen::MatrixXd Sbb = cov.topLeftCorner(db, db);
  Eigen::RowVectorXd Sab = cov.row(db).head(db);
  double saa = cov(db, db);
  if (db > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(Sbb);
    require_config(llt.info() == Eigen::Success,
                   "pure-characteristics smoothing needs a nondegenerate "
                   "taste-coefficient block");
    c.chol_b = llt.matrixL();
    c.slope = llt.solve(Sab.transpose()).transpose();
    c.sd = std::sqrt(std::max(0.0, saa - c.slope.dot(Sab)));
  } else {
    c.chol_b.resize(0, 0);
    c.slope.resize(0);
    c.sd = std::sqrt(std::max(0.0, saa));
  }
  return c;
}

// Winning alpha-interval probability for each alternative of a multinomial
// menu given beta2 = b and alpha ~ N(m, sd^2).
void pcm_accumulate(const ModelSpec& spec, const ProductMenu& menu,
                    const Eigen::VectorXd& b, double m, double sd,
                    Eigen::VectorXd& acc) {
  const int J = spec.n_goods;
  Eigen::VectorXd A(J);  // utility intercept in alpha: q_j = A_j + alpha p_j
  for (int j = 0; j < J; ++j)
    A[j] = menu.x2.row(j).dot(b) + menu.delta[j];

  auto interval_prob = [&](double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    if (sd > 0.0) {
      double p = norm_cdf((hi - m) / sd) - norm_cdf((lo - m) / sd);
      return std::max(0.0, p);
    }
    return (lo < m && m <= hi) ? 1.0 : 0.0;
  };
  auto clip = [](double& lo, double& hi, double a, double bb) {
    // constraint a + bb*alpha > 0
    if (bb > 0.0)
      lo = std::max(lo, -a / bb);
    else if (bb < 0.0)
      hi = std::min(hi, -a / bb);
    else if (a <= 0.0)
      hi = lo;  // empty
  };

  // Outside option: all goods below zero.
  {
    double lo = -kInf, hi = kInf;
    for (int k = 0; k < J; ++k) clip(lo, hi, -A[k], -menu.p[k]);
    acc[0] += interval_prob(lo, hi);
  }
  for (int j = 0; j < J; ++j) {
    double lo = -kInf, hi = kInf;
    clip(lo, hi, A[j], menu.p[j]);
    for (int k = 0; k < J; ++k) {
      if (k == j) continue;
      clip(lo, hi, A[j] - A[k], menu.p[j] - menu.p[k]);
    }
    acc[1 + j] += interval_prob(lo, hi);
  }
}

void pcm_smoothed_draw(const ModelSpec& spec, const CoefficientDensity& density,
                       const ProductMenu& menu, const Stream& st,
                       std::uint64_t i, Eigen::VectorXd& acc);

void pcm_gaussian_draw(const ModelSpec& spec, const AlphaConditional& c,
                       const ProductMenu& menu, const Stream& st,
                       std::uint64_t base, Eigen::VectorXd& acc) {
  const int db = static_cast<int>(c.mean_b.size());
  Eigen::VectorXd z(db);
  for (int k = 0; k < db; ++k) z[k] = st.normal(base + 1 + k);
  Eigen::VectorXd b = c.mean_b + c.chol_b * z;
  double m = c.mean_a + (db > 0 ? c.slope.dot(b - c.mean_b) : 0.0);
  pcm_accumulate(spec, menu, b, m, c.sd, acc);
}

void pcm_point_draw(const ModelSpec& spec, const Eigen::VectorXd& point,
                    const ProductMenu& menu, Eigen::VectorXd& acc) {
  CoefficientDraw draw;
  structural_to_draw(spec, point.data(), draw);
  draw.eps = Eigen::VectorXd::Zero(spec.n_goods);
  Eigen::VectorXd u = utilities(spec, draw, menu);
  acc[choose(u)] += 1.0;
}

void pcm_smoothed_draw(const ModelSpec& spec, const CoefficientDensity& density,
                       const ProductMenu& menu, const Stream& st,
                       std::uint64_t i, Eigen::VectorXd& acc) {
  const std::uint64_t stride = static_cast<std::uint64_t>(density.dim()) + 1;
  const std::uint64_t base = i * stride;
  switch (density.kind()) {
    case CoefficientDensity::Kind::point_mass:
      pcm_point_draw(spec, density.point(), menu, acc);
      return;
    case CoefficientDensity::Kind::gaussian: {
      AlphaConditional c = alpha_conditional(density.mean(), density.cov());
      pcm_gaussian_draw(spec, c, menu, st, base, acc);
      return;
    }
    case CoefficientDensity::Kind::mixture: {
      double u = st.uniform(base);
      const auto& w = density.weights();
      size_t comp = 0;
      double cum = 0.0;
      for (; comp + 1 < w.size(); ++comp) {
        cum += w[comp];
        if (u <= cum) break;
      }
      const CoefficientDensity& cd = density.components()[comp];
      if (cd.kind() == CoefficientDensity::Kind::point_mass) {
        pcm_point_draw(spec, cd.point(), menu, acc);
      } else {
        AlphaConditional c = alpha_conditional(cd.mean(), cd.cov());
        pcm_gaussian_draw(spec, c, menu, st, base, acc);
      }
      return;
    }
    case CoefficientDensity::Kind::grid:
      throw_config(
          "pure-characteristics smoothing supports point-mass, Gaussian and "
          "mixture densities only");
  }
}

// Deterministic chunked accumulation: each chunk is summed serially in index
// order, chunks are combined in fixed order, so results do not depend on the
// thread count.
template <typename PerDraw>
Eigen::VectorXd chunked_average(int n_draws, int k, PerDraw&& per_draw) {
  constexpr int kChunk = 4096;
  const int n_chunks = (n_draws + kChunk - 1) / kChunk;
  Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(k, n_chunks);
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < n_chunks; ++c) {
    try {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(k);
      const int i0 = c * kChunk;
      const int i1 = std::min(n_draws, i0 + kChunk);
      for (int i = i0; i < i1; ++i) per_draw(i, acc);
      partial.col(c) = acc;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(k);
  for (int c = 0; c < n_chunks; ++c) total += partial.col(c);
  return total / n_draws;
}

Eigen::VectorXd mc_shares(const ModelSpec& spec,
                          const CoefficientDensity& density,
                          const ProductMenu& menu, int n_draws,
                          std::uint64_t seed, bool parallel) {
  spec.validate();
  menu.validate(spec);
  require_config(n_draws >= 1, "shares: n_draws must be >= 1");
  require_config(density.dim() == spec.structural_dim(),
                 "shares: density dimension must match the structural "
                 "coefficient count");
  const int K = spec.n_alternatives();
  const int J = spec.n_goods;
  const bool gumbel = spec.eps.family == EpsSpec::Family::gumbel;
  Eigen::MatrixXd Leps;
  if (!gumbel) Leps = eps_cholesky(spec.eps.cov);
  Stream st_theta(seed, 0);
  Stream st_eps(seed, 1);
  const int dim = density.dim();

  std::vector<std::int64_t> counts(K, 0);
  std::exception_ptr failure;
#pragma omp parallel if (parallel)
  {
    std::vector<std::int64_t> local(K, 0);
    std::vector<double> theta(dim);
    Eigen::VectorXd z(J);
    CoefficientDraw draw;
#pragma omp for schedule(static)
    for (int i = 0; i < n_draws; ++i) {
      try {
        density.sample(st_theta, static_cast<std::uint64_t>(i), theta.data());
        structural_to_draw(spec, theta.data(), draw);
        const std::uint64_t e0 = static_cast<std::uint64_t>(i) * J;
        if (gumbel) {
          draw.eps.resize(J);
          for (int j = 0; j < J; ++j) draw.eps[j] = st_eps.gumbel(e0 + j);
        } else {
          for (int j = 0; j < J; ++j) z[j] = st_eps.normal(e0 + j);
          draw.eps = Leps * z;
        }
        Eigen::VectorXd u = utilities(spec, draw, menu);
        int c = choose(u);
        assert(spec.menu != MenuKind::multiunit2 ||
               multiunit_neighbors_beaten(u, c));
        ++local[c];
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
#pragma omp critical
    for (int a = 0; a < K; ++a) counts[a] += local[a];
  }
  if (failure) std::rethrow_exception(failure);
  Eigen::VectorXd shares(K);
  for (int a = 0; a < K; ++a)
    shares[a] = static_cast<double>(counts[a]) / n_draws;
  return shares;
}

}  // namespace

Eigen::VectorXd aggregate_shares_mc(const ModelSpec& spec,
                                    const CoefficientDensity& density,
                                    const ProductMenu& menu, int n_draws,
                                    std::uint64_t seed) {
  return mc_shares(spec, density, menu, n_draws, seed, true);
}

Eigen::VectorXd aggregate_shares_mc_serial(const ModelSpec& spec,
                                           const CoefficientDensity& density,
                                           const ProductMenu& menu, int n_draws,
                                           std::uint64_t seed) {
  return mc_shares(spec, density, menu, n_draws, seed, false);
}

Eigen::VectorXd conditional_logit_shares(const ModelSpec& spec,
                                         const CoefficientDraw& draw,
                                         const ProductMenu& menu) {
  require_config(spec.menu == MenuKind::multinomial,
                 "conditional logit: multinomial menus only");
  require_config(spec.sigma_eps == 1.0 &&
                     spec.eps.family == EpsSpec::Family::gumbel,
                 "conditional logit: requires unit-scale Gumbel taste shocks");
  const int J = spec.n_goods;
  Eigen::VectorXd v(J);
  for (int j = 0; j < J; ++j)
    v[j] = menu.x2.row(j).dot(draw.beta2) + draw.alpha * menu.p[j] +
           menu.delta[j];
  double vmax = v.maxCoeff();
  double sumexp = (v.array() - vmax).exp().sum();
  double lse = vmax + std::log(sumexp);       // log sum_k e^{v_k}
  double S = std::exp(lse);                   // may overflow to inf: handled
  Eigen::VectorXd shares(J + 1);
  shares[0] = std::exp(-S);
  double inside = -std::expm1(-S);            // 1 - e^{-S}
  for (int j = 0; j < J; ++j)
    shares[1 + j] = std::exp(v[j] - lse) * inside;
  return shares;
}

Eigen::VectorXd menu_choice_probs(const ModelSpec& spec,
                                  const CoefficientDraw& draw,
                                  const ProductMenu& menu) {
  if (spec.eps.family == EpsSpec::Family::gumbel)
    return conditional_logit_shares(spec, draw, menu);
  require_config(spec.sigma_eps == 1.0,
                 "menu_choice_probs: normal taste shocks need sigma_eps = 1");
  require_config(spec.n_goods <= 2,
                 "menu_choice_probs: normal taste shocks support at most 2 "
                 "goods");
  Eigen::MatrixXd L = eps_cholesky(spec.eps.cov);
  return normal_menu_probs(spec, draw, menu, L);
}

Eigen::VectorXd aggregate_shares_smoothed(const ModelSpec& spec,
                                          const CoefficientDensity& density,
                                          const ProductMenu& menu, int n_draws,
                                          std::uint64_t seed, bool halton) {
  spec.validate();
  menu.validate(spec);
  require_config(n_draws >= 1, "shares: n_draws must be >= 1");
  require_config(density.dim() == spec.structural_dim(),
                 "shares: density dimension must match the structural "
                 "coefficient count");
  const int K = spec.n_alternatives();
  Eigen::VectorXd shares;

  if (spec.sigma_eps == 0.0) {
    require_config(spec.menu == MenuKind::multinomial,
                   "smoothed shares without taste shocks support multinomial "
                   "menus only");
    require_config(!halton,
                   "smoothed pure-characteristics shares use pseudo-random "
                   "draws");
    require_config(density.kind() != CoefficientDensity::Kind::grid,
                   "pure-characteristics smoothing supports point-mass, "
                   "Gaussian and mixture densities only");
    Stream st(seed, 2);
    if (density.kind() == CoefficientDensity::Kind::point_mass) n_draws = 1;
    shares = chunked_average(n_draws, K,
                             [&](int i, Eigen::VectorXd& acc) {
                               pcm_smoothed_draw(spec, density, menu, st,
                                                 static_cast<std::uint64_t>(i),
                                                 acc);
                             });
  } else {
    const bool gumbel = spec.eps.family == EpsSpec::Family::gumbel;
    Eigen::MatrixXd L;
    if (gumbel) {
      require_config(spec.menu == MenuKind::multinomial,
                     "conditional logit smoothing requires a multinomial menu");
    } else {
      require_config(spec.n_goods <= 2,
                     "smoothed shares with normal taste shocks support at "
                     "most 2 goods");
      L = eps_cholesky(spec.eps.cov);
    }
    if (density.kind() == CoefficientDensity::Kind::point_mass) n_draws = 1;
    Stream st(seed, 0);  // same structural draws as the raw MC path
    const int dim = density.dim();
    shares = chunked_average(
        n_draws, K, [&](int i, Eigen::VectorXd& acc) {
          std::vector<double> theta(dim);
          if (halton)
            density.sample_qmc(static_cast<std::uint64_t>(i) + 1, theta.data());
          else
            density.sample(st, static_cast<std::uint64_t>(i), theta.data());
          CoefficientDraw draw;
          structural_to_draw(spec, theta.data(), draw);
          draw.eps = Eigen::VectorXd::Zero(spec.n_goods);
          if (gumbel)
            acc += conditional_logit_shares(spec, draw, menu);
          else
            acc += normal_menu_probs(spec, draw, menu, L);
        });
  }
  double total = shares.sum();
  require_numerical(std::abs(total - 1.0) <= 1e-6,
                    "smoothed shares failed to sum to 1");
  return shares / total;
}

double bundle_pair_probability(double h1, double h2, double h3,
                               bool delta_negative,
                               const Eigen::MatrixXd& eps_cov) {
  require_config(eps_cov.rows() == 2 && eps_cov.cols() == 2,
                 "bundle_pair_probability: covariance must be 2x2");
  Eigen::LLT<Eigen::MatrixXd> llt(eps_cov);
  require_config(llt.info() == Eigen::Success,
                 "bundle_pair_probability: covariance must be positive "
                 "definite");
  const double s1 = std::sqrt(eps_cov(0, 0));
  const double s2 = std::sqrt(eps_cov(1, 1));
  const double c = eps_cov(0, 1);
  if (delta_negative) {
    double rho = c / (s1 * s2);
    return bvn_cdf(h1 / s1, h2 / s2, rho);
  }
  // P(eps1 < h2, eps1 + eps2 < h3)
  double vs = eps_cov(0, 0) + 2.0 * c + eps_cov(1, 1);
  double ss = std::sqrt(vs);
  double rho = (eps_cov(0, 0) + c) / (s1 * ss);
  return bvn_cdf(h2 / s1, h3 / ss, rho);
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kSqrt2 = 1.4142135623730950488;

// bvn_cdf at correlation 1/sqrt(2) and its partial derivatives; the
// correlation arises whenever a single shock is paired with the sum of two.
double bvn_half(double x, double y) { return bvn_cdf(x, y, kInvSqrt2); }
double bvn_half_dx(double x, double y) {
  return norm_pdf(x) * norm_cdf(kSqrt2 * y - x);
}
double bvn_half_dy(double x, double y) {
  return norm_pdf(y) * norm_cdf(kSqrt2 * x - y);
}

// P(own good alone is best) as a function of the two deterministic utilities,
// with derivatives; "own" is the good the label selects.
void own_good_prob(double vo, double vq, double D, double& p, double& dvo,
                   double& dvq) {
  if (D >= 0.0) {
    // The bundle beats "own alone" exactly when the other good's inclusive
    // utility clears -D, independent of the own shock.
    p = norm_cdf(vo) * norm_cdf(-vq - D);
    dvo = norm_pdf(vo) * norm_cdf(-vq - D);
    dvq = -norm_cdf(vo) * norm_pdf(vq + D);
    return;
  }
  const double t = -vo - D;            // upper split of the own shock
  const double c = (vq - vo) * kInvSqrt2;
  p = norm_cdf(t) - norm_cdf(-vo) + bvn_half(-vo, c) - bvn_half(t, c) +
      norm_cdf(vo + D) * norm_cdf(-vq - D);
  dvo = -norm_pdf(t) + norm_pdf(vo) - bvn_half_dx(-vo, c) -
        bvn_half_dy(-vo, c) * kInvSqrt2 + bvn_half_dx(t, c) +
        bvn_half_dy(t, c) * kInvSqrt2 + norm_pdf(vo + D) * norm_cdf(-vq - D);
  dvq = (bvn_half_dy(-vo, c) - bvn_half_dy(t, c)) * kInvSqrt2 -
        norm_cdf(vo + D) * norm_pdf(vq + D);
}

}  // namespace

BundleProbsGrad bundle_probs_iid_grad(double v1, double v2, double D,
                                      int label_mask) {
  BundleProbsGrad r;
  r.value.setZero();
  r.d1.setZero();
  r.d2.setZero();
  const double s = v1 + v2 + D;  // deterministic part of the bundle utility
  if (D <= 0.0) {
    // Sub-additive bundle: the corner events reduce to orthant products.
    if (label_mask & 1) {
      r.value[0] = norm_cdf(-v1) * norm_cdf(-v2);
      r.d1[0] = -norm_pdf(v1) * norm_cdf(-v2);
      r.d2[0] = -norm_cdf(-v1) * norm_pdf(v2);
    }
    if (label_mask & 8) {
      r.value[3] = norm_cdf(v1 + D) * norm_cdf(v2 + D);
      r.d1[3] = norm_pdf(v1 + D) * norm_cdf(v2 + D);
      r.d2[3] = norm_cdf(v1 + D) * norm_pdf(v2 + D);
    }
  } else {
    // Super-additive bundle: the diagonal constraint on e1 + e2 binds; split
    // the own shock at the point where the binding constraint switches.
    if (label_mask & 1) {
      const double y0 = -s * kInvSqrt2;
      const double t0 = -v1 - D;
      r.value[0] = norm_cdf(t0) * norm_cdf(-v2) + bvn_half(-v1, y0) -
                   bvn_half(t0, y0);
      r.d1[0] = -norm_pdf(t0) * norm_cdf(-v2) - bvn_half_dx(-v1, y0) -
                bvn_half_dy(-v1, y0) * kInvSqrt2 + bvn_half_dx(t0, y0) +
                bvn_half_dy(t0, y0) * kInvSqrt2;
      r.d2[0] = -norm_cdf(t0) * norm_pdf(v2) +
                (bvn_half_dy(t0, y0) - bvn_half_dy(-v1, y0)) * kInvSqrt2;
    }
    if (label_mask & 8) {
      const double y1 = s * kInvSqrt2;
      const double t1 = v1 + D;
      r.value[3] = norm_cdf(v1) * norm_cdf(v2 + D) + bvn_half(t1, y1) -
                   bvn_half(v1, y1);
      r.d1[3] = norm_pdf(v1) * norm_cdf(v2 + D) + bvn_half_dx(t1, y1) +
                bvn_half_dy(t1, y1) * kInvSqrt2 - bvn_half_dx(v1, y1) -
                bvn_half_dy(v1, y1) * kInvSqrt2;
      r.d2[3] = norm_cdf(v1) * norm_pdf(v2 + D) +
                (bvn_half_dy(t1, y1) - bvn_half_dy(v1, y1)) * kInvSqrt2;
    }
  }
  if (label_mask & 2) own_good_prob(v1, v2, D, r.value[1], r.d1[1], r.d2[1]);
  if (label_mask & 4) own_good_prob(v2, v1, D, r.value[2], r.d2[2], r.d1[2]);
  return r;
}

Eigen::VectorXd simulated_bundle_shares(const ProductMenu& menu,
                                        const CoefficientDensity& density,
                                        int n_draws, std::uint64_t seed,
                                        const Eigen::MatrixXd& eps_cov,
                                        bool halton) {
  ModelSpec spec;
  spec.menu = MenuKind::bundles2;
  spec.n_goods = 2;
  spec.sigma_eps = 1.0;
  spec.d_x = density.dim() - 1;  // (d_x - 1) tastes + alpha + Delta
  spec.eps = EpsSpec::normal(eps_cov);
  return aggregate_shares_smoothed(spec, density, menu, n_draws, seed, halton);
}

}  // namespace rcd
