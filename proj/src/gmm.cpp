#include "rcdemand/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "rcdemand/common.hpp"
#include "rcdemand/demand.hpp"
#include "rcdemand/normal.hpp"
#include "rcdemand/rng.hpp"

namespace rcd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_gamma(const Eigen::VectorXd& g) {
  std::ostringstream os;
  os << std::setprecision(6) << "(";
  for (int k = 0; k < g.size(); ++k) os << (k ? ", " : "") << g[k];
  os << ")";
  return os.str();
}

int label_index(const std::vector<std::string>& labels,
                const std::string& want) {
  for (std::size_t k = 0; k < labels.size(); ++k)
    if (labels[k] == want) return static_cast<int>(k);
  require_config(false, "gmm: share label '" + want + "' not in the panel");
  return -1;
}

// Structural draws shared by every market and criterion evaluation (common
// random numbers); the sampler mirrors the smoothed-share simulator exactly.
struct DrawSet {
  Eigen::VectorXd beta2, alpha, effect;
};

DrawSet make_draws(const GmmSpec& spec, const CoefficientDensity& density) {
  DrawSet d;
  d.beta2.resize(spec.n_s);
  d.alpha.resize(spec.n_s);
  d.effect.resize(spec.n_s);
  const Stream st(spec.seed, 0);
  double theta[3];
  for (int i = 0; i < spec.n_s; ++i) {
    if (spec.halton)
      density.sample_qmc(static_cast<std::uint64_t>(i) + 1, theta);
    else
      density.sample(st, static_cast<std::uint64_t>(i), theta);
    d.beta2[i] = theta[0];
    d.alpha[i] = theta[1];
    d.effect[i] = theta[2];
  }
  return d;
}

// Per-draw deterministic utility of each good at delta = 0.
struct MarketDraws {
  Eigen::VectorXd c1, c2;
};

MarketDraws market_draws(const DrawSet& ds, const Market& m) {
  MarketDraws md;
  const int n = static_cast<int>(ds.alpha.size());
  md.c1.resize(n);
  md.c2.resize(n);
  for (int i = 0; i < n; ++i) {
    md.c1[i] = m.x2(0, 0) * ds.beta2[i] + ds.alpha[i] * m.p[0];
    md.c2[i] = m.x2(1, 0) * ds.beta2[i] + ds.alpha[i] * m.p[1];
  }
  return md;
}

struct PairEval {
  Eigen::Vector2d s;
  Eigen::Matrix2d jac;
};

PairEval eval_pair(const DrawSet& ds, const MarketDraws& md,
                   const Eigen::Vector2d& delta, int la, int lb, int mask) {
  double s0 = 0, s1 = 0, a00 = 0, a01 = 0, a10 = 0, a11 = 0;
  const int n = static_cast<int>(ds.alpha.size());
  for (int i = 0; i < n; ++i) {
    const BundleProbsGrad g = bundle_probs_iid_grad(
        md.c1[i] + delta[0], md.c2[i] + delta[1], ds.effect[i], mask);
    s0 += g.value[la];
    a00 += g.d1[la];
    a01 += g.d2[la];
    s1 += g.value[lb];
    a10 += g.d1[lb];
    a11 += g.d2[lb];
  }
  const double w = 1.0 / n;
  PairEval e;
  e.s << s0 * w, s1 * w;
  e.jac << a00 * w, a01 * w, a10 * w, a11 * w;
  return e;
}

// Damped Newton on one 2x2 subsystem with the analytic Jacobian.  Returns
// false with a reason when tol is unreachable.
bool invert_pair(const DrawSet& ds, const MarketDraws& md,
                 const Eigen::Vector2d& target, int la, int lb,
                 Eigen::Vector2d& delta, double tol, int max_iter,
                 std::string& reason) {
  const int mask = (1 << la) | (1 << lb);
  PairEval e = eval_pair(ds, md, delta, la, lb, mask);
  double best = (e.s - target).lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iter; ++it) {
    if (best <= tol) return true;
    const double det = e.jac(0, 0) * e.jac(1, 1) - e.jac(0, 1) * e.jac(1, 0);
    if (!(std::abs(det) > 1e-300)) {
      reason = "singular share Jacobian";
      return false;
    }
    const Eigen::Vector2d r = e.s - target;
    const Eigen::Vector2d step(
        (e.jac(1, 1) * r[0] - e.jac(0, 1) * r[1]) / det,
        (-e.jac(1, 0) * r[0] + e.jac(0, 0) * r[1]) / det);
    double lambda = 1.0;
    bool improved = false;
    for (int h = 0; h < 30; ++h) {
      const Eigen::Vector2d cand = delta - lambda * step;
      const PairEval ec = eval_pair(ds, md, cand, la, lb, mask);
      const double res = (ec.s - target).lpNorm<Eigen::Infinity>();
      if (res < best) {
        delta = cand;
        e = ec;
        best = res;
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) {
      reason = "damping stalled at share residual " + std::to_string(best);
      return false;
    }
  }
  if (best <= tol) return true;
  reason = "iteration cap at share residual " + std::to_string(best);
  return false;
}

int instrument_width(const GmmSpec& spec, const MarketPanel& data) {
  int m = 0;
  for (const std::string& b : spec.instruments) {
    if (b == "const")
      m += 1;
    else if (b == "z")
      m += data.n_goods * data.d_z;
    else if (b == "x2")
      m += data.n_goods * (data.d_x - 1);
    else
      m += data.n_goods;  // "x1"
  }
  return m;
}

void fill_instruments(const GmmSpec& spec, const MarketPanel& data,
                      const Market& mkt, Eigen::VectorXd& inst) {
  int pos = 0;
  for (const std::string& b : spec.instruments) {
    if (b == "const") {
      inst[pos++] = 1.0;
    } else if (b == "z") {
      for (int j = 0; j < data.n_goods; ++j)
        for (int k = 0; k < data.d_z; ++k) inst[pos++] = mkt.z(j, k);
    } else if (b == "x2") {
      for (int j = 0; j < data.n_goods; ++j)
        for (int k = 0; k < data.d_x - 1; ++k) inst[pos++] = mkt.x2(j, k);
    } else {
      for (int j = 0; j < data.n_goods; ++j) inst[pos++] = mkt.x1[j];
    }
  }
  inst *= spec.instrument_scale;
}

}  // namespace

void GmmSpec::validate() const {
  require_config(lower.size() == 4 && upper.size() == 4,
                 "gmm: parameter bounds must have 4 components");
  for (int k = 0; k < 4; ++k)
    require_config(lower[k] < upper[k], "gmm: empty parameter box");
  require_config(lower[1] >= 0.0 && lower[3] >= 0.0,
                 "gmm: standard-deviation parameters need lower bounds >= 0");
  require_config(n_s >= 1, "gmm: n_s must be >= 1");
  require_config(std::isfinite(beta2), "gmm: beta2 must be finite");
  require_config(instrument_scale != 0.0,
                 "gmm: instrument_scale must be nonzero");
  require_config(ridge >= 0.0, "gmm: ridge must be >= 0");
  require_config(inversion_tol > 0.0 && inversion_max_iter >= 1,
                 "gmm: inversion tolerance and iteration cap must be positive");
  require_config(!instruments.empty(), "gmm: instrument list is empty");
  static const std::set<std::string> known{"const", "z", "x2", "x1"};
  for (const std::string& b : instruments)
    require_config(known.count(b) == 1,
                   "gmm: unknown instrument block '" + b + "'");
  static const std::set<std::string> labels{"00", "10", "01", "11"};
  for (const auto& pair : subsystems)
    require_config(labels.count(pair[0]) == 1 && labels.count(pair[1]) == 1 &&
                       pair[0] != pair[1],
                   "gmm: subsystems must pair two distinct bundle labels");
}

CoefficientDensity bundle_gamma_density(const GmmSpec& spec,
                                        const Eigen::VectorXd& gamma) {
  require_config(gamma.size() == 4, "gmm: gamma must have 4 components");
  require_config(gamma[1] >= 0.0 && gamma[3] >= 0.0,
                 "gmm: standard deviations in gamma must be >= 0");
  Eigen::VectorXd mean(3);
  mean << spec.beta2, gamma[0], gamma[2];
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  cov(1, 1) = gamma[1] * gamma[1];
  cov(2, 2) = gamma[3] * gamma[3];
  return CoefficientDensity::gaussian(std::move(mean), std::move(cov));
}

GmmMoments gmm_moments(const Eigen::VectorXd& gamma, const GmmSpec& spec,
                       const MarketPanel& data) {
  spec.validate();
  data.validate();
  require_config(data.menu == MenuKind::bundles2 && data.n_goods == 2,
                 "gmm: the estimator covers the two-good bundle menu");
  require_config(data.d_x == 2,
                 "gmm: the bundle model uses one taste covariate per good");

  const CoefficientDensity density = bundle_gamma_density(spec, gamma);
  const DrawSet ds = make_draws(spec, density);

  int idx[2][2];
  for (int s = 0; s < 2; ++s)
    for (int k = 0; k < 2; ++k)
      idx[s][k] = label_index(data.share_labels, spec.subsystems[s][k]);
  const int i10 = label_index(data.share_labels, "10");
  const int i01 = label_index(data.share_labels, "01");
  const int i11 = label_index(data.share_labels, "11");

  const int m_inst = instrument_width(spec, data);
  const int T = static_cast<int>(data.markets.size());
  GmmMoments out;
  out.per_market.resize(T, 3 * m_inst);
  Eigen::VectorXd inst(m_inst);

  for (int t = 0; t < T; ++t) {
    const Market& mkt = data.markets[t];
    const MarketDraws md = market_draws(ds, mkt);

    // Start from a probit read of the marginal purchase rates.
    auto start_for = [&](int good) {
      double m = (good == 0 ? mkt.shares[i10] : mkt.shares[i01]) +
                 mkt.shares[i11];
      m = std::min(1.0 - 1e-9, std::max(1e-9, m));
      const double cbar = good == 0 ? md.c1.mean() : md.c2.mean();
      return norm_quantile(m) - cbar;
    };
    Eigen::Vector2d delta_a(start_for(0), start_for(1));
    Eigen::Vector2d delta_b;

    for (int s = 0; s < 2; ++s) {
      const Eigen::Vector2d target(mkt.shares[idx[s][0]],
                                   mkt.shares[idx[s][1]]);
      Eigen::Vector2d& dref = s == 0 ? delta_a : delta_b;
      if (s == 1) delta_b = delta_a;  // warm start at the sibling root
      std::string reason;
      if (!invert_pair(ds, md, target, idx[s][0], idx[s][1], dref,
                       spec.inversion_tol, spec.inversion_max_iter, reason))
        throw Error(ErrorKind::numerical,
                    "gmm: share inversion failed at market " +
                        std::to_string(t) + " for gamma = " +
                        format_gamma(gamma) + " (subsystem " +
                        spec.subsystems[s][0] + "/" + spec.subsystems[s][1] +
                        ": " + reason + ")");
    }

    const Eigen::Vector3d resid(delta_a[0] - mkt.x1[0],
                                delta_a[1] - mkt.x1[1],
                                delta_b[0] - mkt.x1[0]);
    fill_instruments(spec, data, mkt, inst);
    for (int r = 0; r < 3; ++r)
      out.per_market.row(t).segment(r * m_inst, m_inst) =
          resid[r] * inst.transpose();
  }
  out.g = out.per_market.colwise().mean();
  return out;
}

double gmm_criterion(const Eigen::VectorXd& gamma, const GmmSpec& spec,
                     const MarketPanel& data) {
  const GmmMoments m = gmm_moments(gamma, spec, data);
  if (spec.weight == GmmSpec::Weight::identity) return m.g.squaredNorm();
  const double T = static_cast<double>(m.per_market.rows());
  Eigen::MatrixXd S = m.per_market.transpose() * m.per_market / T;
  S.diagonal().array() += spec.ridge;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  require_numerical(ldlt.info() == Eigen::Success,
                    "gmm: moment covariance factorization failed");
  return std::max(0.0, m.g.dot(ldlt.solve(m.g)));
}

namespace {

struct NmOut {
  Eigen::VectorXd x;
  double f = kInf;
  int evals = 0;
  bool converged = false;
};

// Nelder-Mead with the standard reflection/expansion/contraction/shrink
// coefficients; stops on the evaluation budget or when the simplex diameter
// (and function spread) collapse.
template <typename F>
NmOut nelder_mead(F&& fn, const Eigen::VectorXd& x0,
                  const Eigen::VectorXd& step, int max_evals, double tol) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  NmOut out;
  auto call = [&](const Eigen::VectorXd& x) {
    ++out.evals;
    return fn(x);
  };
  fs[0] = call(xs[0]);
  for (int k = 0; k < n; ++k) {
    xs[k + 1][k] += step[k];
    fs[k + 1] = call(xs[k + 1]);
  }
  std::vector<int> id(n + 1);
  while (true) {
    std::iota(id.begin(), id.end(), 0);
    std::stable_sort(id.begin(), id.end(),
                     [&](int a, int b) { return fs[a] < fs[b]; });
    {
      std::vector<Eigen::VectorXd> xs2(n + 1);
      std::vector<double> fs2(n + 1);
      for (int k = 0; k <= n; ++k) {
        xs2[k] = xs[id[k]];
        fs2[k] = fs[id[k]];
      }
      xs.swap(xs2);
      fs.swap(fs2);
    }
    double diameter = 0.0;
    for (int k = 1; k <= n; ++k)
      diameter = std::max(diameter, (xs[k] - xs[0]).lpNorm<Eigen::Infinity>());
    const bool flat = std::isfinite(fs[0]) &&
                      fs[n] - fs[0] <= 1e-15 * (1.0 + std::abs(fs[0]));
    if (diameter <= tol || flat) {
      out.converged = true;
      break;
    }
    if (out.evals >= max_evals) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < n; ++k) centroid += xs[k];
    centroid /= n;

    const Eigen::VectorXd xr = centroid + (centroid - xs[n]);
    const double fr = call(xr);
    if (fr < fs[0]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[n]);
      const double fe = call(xe);
      if (fe < fr) {
        xs[n] = xe;
        fs[n] = fe;
      } else {
        xs[n] = xr;
        fs[n] = fr;
      }
    } else if (fr < fs[n - 1]) {
      xs[n] = xr;
      fs[n] = fr;
    } else if (fr < fs[n]) {
      const Eigen::VectorXd xc = centroid + 0.5 * (centroid - xs[n]);
      const double fc = call(xc);
      if (fc <= fr) {
        xs[n] = xc;
        fs[n] = fc;
      } else {
        for (int k = 1; k <= n; ++k) {
          xs[k] = xs[0] + 0.5 * (xs[k] - xs[0]);
          fs[k] = call(xs[k]);
        }
      }
    } else {
      const Eigen::VectorXd xc = centroid - 0.5 * (centroid - xs[n]);
      const double fc = call(xc);
      if (fc < fs[n]) {
        xs[n] = xc;
        fs[n] = fc;
      } else {
        for (int k = 1; k <= n; ++k) {
          xs[k] = xs[0] + 0.5 * (xs[k] - xs[0]);
          fs[k] = call(xs[k]);
        }
      }
    }
  }
  int best = 0;
  for (int k = 1; k <= n; ++k)
    if (fs[k] < fs[best]) best = k;
  out.x = xs[best];
  out.f = fs[best];
  return out;
}

}  // namespace

GmmEstimate gmm_estimate(const GmmSpec& spec, const MarketPanel& data,
                         const OptimOptions& opts) {
  spec.validate();
  data.validate();
  require_config(opts.n_starts >= 1, "gmm: n_starts must be >= 1");
  require_config(opts.max_evals >= 10, "gmm: max_evals must be >= 10");
  require_config(opts.simplex_tol > 0.0, "gmm: simplex_tol must be positive");
  const Eigen::VectorXd range = spec.upper - spec.lower;

  auto clamp_box = [&](const Eigen::VectorXd& x) {
    return x.cwiseMax(spec.lower).cwiseMin(spec.upper).eval();
  };
  // q at the clamped point; W = nullptr means the identity weight.
  auto weighted_q = [&](const Eigen::VectorXd& gamma,
                        const Eigen::MatrixXd* W) {
    const GmmMoments m = gmm_moments(gamma, spec, data);
    if (W == nullptr) return m.g.squaredNorm();
    return std::max(0.0, m.g.dot((*W) * m.g));
  };

  // One multistart pass under a fixed weight; fills reports and returns the
  // best clamped point with its q, or throws when every start fails.
  auto run_stage = [&](const Eigen::VectorXd& first_start,
                       const Eigen::MatrixXd* W,
                       std::vector<GmmStartReport>& reports)
      -> std::pair<Eigen::VectorXd, double> {
    std::vector<Eigen::VectorXd> starts{first_start};
    const Stream st(spec.seed, 9);
    std::uint64_t c = 0;
    for (int k = 1; k < opts.n_starts; ++k) {
      Eigen::VectorXd s(4);
      for (int j = 0; j < 4; ++j)
        s[j] = spec.lower[j] + range[j] * st.uniform(c++);
      starts.push_back(s);
    }

    const std::size_t base = reports.size();
    double best_f = kInf;
    int best_k = -1;
    Eigen::VectorXd best_x;
    for (int k = 0; k < opts.n_starts; ++k) {
      int failures = 0;
      auto objective = [&](const Eigen::VectorXd& x) -> double {
        const Eigen::VectorXd xc = clamp_box(x);
        const double penalty = 1e3 * (x - xc).squaredNorm();
        try {
          return weighted_q(xc, W) + penalty;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::numerical) throw;
          ++failures;
          return kInf;
        }
      };
      Eigen::VectorXd step = 0.15 * range;
      for (int j = 0; j < 4; ++j)
        if (starts[k][j] + step[j] > spec.upper[j]) step[j] = -step[j];
      const NmOut r =
          nelder_mead(objective, starts[k], step, opts.max_evals,
                      opts.simplex_tol);
      GmmStartReport rep;
      rep.start = starts[k];
      rep.best = clamp_box(r.x);
      rep.q = r.f;
      rep.evaluations = r.evals;
      rep.inversion_failures = failures;
      rep.converged = r.converged;
      if (!std::isfinite(r.f))
        rep.error = "no feasible point (every evaluation failed to invert)";
      reports.push_back(rep);
      if (r.f < best_f) {
        best_f = r.f;
        best_k = k;
        best_x = r.x;
      }
    }
    if (best_k < 0) {
      std::ostringstream os;
      os << "gmm_estimate: every start failed";
      for (std::size_t k = base; k < reports.size(); ++k)
        os << "\n  start " << (k - base) << " at "
           << format_gamma(reports[k].start) << ": " << reports[k].error;
      throw Error(ErrorKind::numerical, os.str());
    }

    // Polish the winner with a tighter, smaller simplex.
    {
      int failures = 0;
      auto objective = [&](const Eigen::VectorXd& x) -> double {
        const Eigen::VectorXd xc = clamp_box(x);
        const double penalty = 1e3 * (x - xc).squaredNorm();
        try {
          return weighted_q(xc, W) + penalty;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::numerical) throw;
          ++failures;
          return kInf;
        }
      };
      Eigen::VectorXd step = 0.02 * range;
      for (int j = 0; j < 4; ++j)
        if (best_x[j] + step[j] > spec.upper[j]) step[j] = -step[j];
      const NmOut r = nelder_mead(objective, best_x, step, opts.polish_evals,
                                  opts.simplex_tol * 0.01);
      GmmStartReport& rep = reports[base + best_k];
      rep.evaluations += r.evals;
      rep.inversion_failures += failures;
      if (r.f <= best_f) {
        best_f = r.f;
        best_x = r.x;
        rep.best = clamp_box(r.x);
        rep.q = r.f;
        rep.converged = r.converged;
      }
    }
    const Eigen::VectorXd xc = clamp_box(best_x);
    return {xc, weighted_q(xc, W)};
  };

  GmmEstimate est;
  const Eigen::VectorXd center = 0.5 * (spec.lower + spec.upper);
  if (spec.weight == GmmSpec::Weight::identity) {
    auto [x, q] = run_stage(center, nullptr, est.starts);
    est.gamma = x;
    est.q = q;
    est.weight = Eigen::MatrixXd::Identity(3 * instrument_width(spec, data),
                                           3 * instrument_width(spec, data));
  } else {
    auto [x1, q1] = run_stage(center, nullptr, est.starts);
    (void)q1;
    const GmmMoments m = gmm_moments(x1, spec, data);
    const double T = static_cast<double>(m.per_market.rows());
    Eigen::MatrixXd S = m.per_market.transpose() * m.per_market / T;
    S.diagonal().array() += spec.ridge;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    require_numerical(ldlt.info() == Eigen::Success,
                      "gmm: moment covariance factorization failed");
    const Eigen::MatrixXd W = ldlt.solve(
        Eigen::MatrixXd::Identity(S.rows(), S.cols()));
    auto [x2, q2] = run_stage(x1, &W, est.starts);
    est.gamma = x2;
    est.q = q2;
    est.weight = W;
  }
  est.on_boundary = false;
  for (int j = 0; j < 4; ++j) {
    const double edge = 1e-7 * range[j];
    if (est.gamma[j] - spec.lower[j] <= edge ||
        spec.upper[j] - est.gamma[j] <= edge)
      est.on_boundary = true;
  }
  return est;
}

}  // namespace rcd
