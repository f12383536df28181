#include "rcdemand/phi.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <vector>

#include "rcdemand/demand.hpp"
#include "rcdemand/rng.hpp"

namespace rcd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Directions whose taste-shock coordinate is below this cannot be realized
// as a finite menu (characteristics scale like 1/w_last).
constexpr double kMinLastCoord = 1e-8;
constexpr int kMaxGoodsForSubsets = 20;

bool is_bundle_strategy(PhiStrategy s) {
  return s != PhiStrategy::pcm && s != PhiStrategy::blp;
}

bool is_multiunit_strategy(PhiStrategy s) {
  switch (s) {
    case PhiStrategy::multi00:
    case PhiStrategy::multi01:
    case PhiStrategy::multi20:
    case PhiStrategy::multi21:
      return true;
    default:
      return false;
  }
}

// Sign of the pinned competitor index: -1 freezes the other good out of the
// market, +1 forces it in.
double pin_sign(PhiStrategy s) {
  switch (s) {
    case PhiStrategy::bundle00:
    case PhiStrategy::multi00:
    case PhiStrategy::multi20:
      return -1.0;
    default:
      return 1.0;
  }
}

// Menu alternative whose demand the strategy reads (label order).
int strategy_alternative(PhiStrategy s) {
  switch (s) {
    case PhiStrategy::bundle00:
    case PhiStrategy::multi00:
      return 0;  // "00"
    case PhiStrategy::multi01:
      return 2;  // "01"
    case PhiStrategy::bundle11:
      return 3;  // "11"
    case PhiStrategy::multi20:
      return 4;  // "20"
    case PhiStrategy::multi21:
      return 5;  // "21"
    default:
      return -1;
  }
}

// True when the demand value estimates P(slot index above the offset), so
// the stored CDF is its complement.
bool strategy_complement(PhiStrategy s) {
  switch (s) {
    case PhiStrategy::blp:
    case PhiStrategy::bundle11:
    case PhiStrategy::multi20:
    case PhiStrategy::multi21:
      return true;
    default:
      return false;
  }
}

void check_strategy(const ModelSpec& spec, PhiStrategy s, int j) {
  switch (s) {
    case PhiStrategy::pcm:
      require_config(spec.menu == MenuKind::multinomial &&
                         spec.sigma_eps == 0.0,
                     "marginalization strategy requires a multinomial menu "
                     "without taste shocks");
      require_config(j >= 0 && j < spec.n_goods,
                     "phi: product index out of range");
      break;
    case PhiStrategy::blp:
      require_config(spec.menu == MenuKind::multinomial &&
                         spec.sigma_eps == 1.0,
                     "competitor-pinning strategy requires a multinomial menu "
                     "with taste shocks");
      require_config(j >= 0 && j < spec.n_goods,
                     "phi: product index out of range");
      break;
    case PhiStrategy::bundle00:
    case PhiStrategy::bundle11:
      require_config(spec.menu == MenuKind::bundles2 && spec.sigma_eps == 1.0,
                     "bundle limit strategies require the two-good bundle menu "
                     "with taste shocks");
      require_config(j == 0 || j == 1, "phi: product index out of range");
      break;
    default:
      require_config(spec.menu == MenuKind::multiunit2 &&
                         spec.sigma_eps == 1.0,
                     "multi-unit limit strategies require the two-good "
                     "multi-unit menu with taste shocks");
      require_config(j == 0,
                     "multi-unit limit strategies are defined for the first "
                     "good (the one that can be bought twice)");
      break;
  }
}

int slot_dimension(const ModelSpec& spec, PhiStrategy s) {
  return (spec.d_x - 1) + 1 + (s == PhiStrategy::pcm ? 0 : 1);
}

Eigen::MatrixXd eps_cholesky(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  require_config(llt.info() == Eigen::Success,
                 "taste-shock covariance must be positive definite");
  return llt.matrixL();
}

std::string flip_set_description(const std::vector<int>& flip) {
  std::ostringstream os;
  os << "{";
  for (size_t i = 0; i < flip.size(); ++i) os << (i ? "," : "") << flip[i];
  os << "}";
  return os.str();
}

// Shared scaffold for the truncation diagnostic: evaluate at M and M/2.
template <typename ValueAt>
PhiValue with_truncation_diagnostic(const PhiOptions& opts, ValueAt&& value_at) {
  require_config(opts.truncation > 0.0, "phi: truncation must be positive");
  PhiValue out;
  out.value = value_at(opts.truncation);
  const double half = value_at(0.5 * opts.truncation);
  out.truncation_gap = std::abs(out.value - half);
  out.bias_warning = out.truncation_gap > opts.bias_budget;
  return out;
}

// ---------------------------------------------------------------------------
// Sorted-sweep sinogram assembly.  Per direction every draw contributes a
// one-sided threshold in the offset u (after discarding draws failing an
// offset-free gate), so the whole offset row is two binary searches per cell.

struct SweepDraws {
  Eigen::MatrixXd slot;   // n x q rows (beta2, alpha[, eps_own])
  Eigen::VectorXd other;  // pinned competitor utility (blp: max over all)
  Eigen::VectorXd e11, e20, e21;  // bundle effects (e11 holds the pair effect)
};

SweepDraws make_sweep_draws(const ModelSpec& spec,
                            const CoefficientDensity& density,
                            PhiStrategy strategy, int j,
                            const ProductMenu& pinned, int n,
                            std::uint64_t seed) {
  const int J = spec.n_goods;
  const int db = spec.d_x - 1;
  const int q = slot_dimension(spec, strategy);
  const bool with_eps = spec.sigma_eps != 0.0;
  const bool gumbel = spec.eps.family == EpsSpec::Family::gumbel;
  Eigen::MatrixXd Leps;
  if (with_eps && !gumbel) Leps = eps_cholesky(spec.eps.cov);
  Stream st_theta(seed, 0);
  Stream st_eps(seed, 1);

  SweepDraws d;
  d.slot.resize(n, q);
  if (strategy != PhiStrategy::pcm) d.other.resize(n);
  if (is_bundle_strategy(strategy)) d.e11.resize(n);
  if (is_multiunit_strategy(strategy)) {
    d.e20.resize(n);
    d.e21.resize(n);
  }

  std::vector<double> theta(density.dim());
  Eigen::VectorXd z(J), eps = Eigen::VectorXd::Zero(J);
  CoefficientDraw draw;
  for (int i = 0; i < n; ++i) {
    density.sample(st_theta, static_cast<std::uint64_t>(i), theta.data());
    structural_to_draw(spec, theta.data(), draw);
    if (with_eps) {
      const std::uint64_t e0 = static_cast<std::uint64_t>(i) * J;
      if (gumbel) {
        for (int k = 0; k < J; ++k) eps[k] = st_eps.gumbel(e0 + k);
      } else {
        for (int k = 0; k < J; ++k) z[k] = st_eps.normal(e0 + k);
        eps = Leps * z;
      }
    }
    d.slot.row(i).head(db) = draw.beta2.transpose();
    d.slot(i, db) = draw.alpha;
    switch (strategy) {
      case PhiStrategy::pcm:
        break;
      case PhiStrategy::blp: {
        d.slot(i, db + 1) = eps[j];
        // Mirror the simulator's utility arithmetic for the competitors.
        double best = -kInf;
        for (int k = 0; k < J; ++k) {
          if (k == j) continue;
          double v = (pinned.x2.row(k).dot(draw.beta2) +
                      draw.alpha * pinned.p[k] + pinned.delta[k]) +
                     eps[k];
          best = std::max(best, v);
        }
        d.other[i] = best;
        break;
      }
      default: {
        const int other = 1 - j;
        d.slot(i, db + 1) = eps[j];
        d.other[i] = (pinned.x2.row(other).dot(draw.beta2) +
                      draw.alpha * pinned.p[other] + pinned.delta[other]) +
                     eps[other];
        d.e11[i] = draw.bundle_effects[0];
        if (is_multiunit_strategy(strategy)) {
          d.e20[i] = draw.bundle_effects[1];
          d.e21[i] = draw.bundle_effects[2];
        }
        break;
      }
    }
  }
  return d;
}

// Thresholds for one direction; draws failing the offset-free gate are
// dropped (they never pick the strategy's alternative at any offset).
std::vector<double> direction_thresholds(PhiStrategy strategy,
                                         const SweepDraws& d,
                                         const Eigen::VectorXd& sw,
                                         double wq) {
  const int n = static_cast<int>(sw.size());
  std::vector<double> th;
  th.reserve(n);
  switch (strategy) {
    case PhiStrategy::pcm:
      th.assign(sw.data(), sw.data() + n);
      break;
    case PhiStrategy::blp:
      for (int i = 0; i < n; ++i)
        th.push_back(sw[i] - wq * std::max(0.0, d.other[i]));
      break;
    case PhiStrategy::bundle00:
      for (int i = 0; i < n; ++i)
        if (d.other[i] < 0.0)
          th.push_back(sw[i] + wq * std::max(0.0, d.other[i] + d.e11[i]));
      break;
    case PhiStrategy::bundle11:
      for (int i = 0; i < n; ++i)
        if (d.other[i] + d.e11[i] > 0.0)
          th.push_back(sw[i] + wq * (d.e11[i] + std::min(0.0, d.other[i])));
      break;
    case PhiStrategy::multi00:
      for (int i = 0; i < n; ++i) {
        const double vo = d.other[i];
        if (vo < 0.0)
          th.push_back(sw[i] + wq * std::max({0.0, vo + d.e11[i],
                                              0.5 * d.e20[i],
                                              0.5 * (vo + d.e21[i])}));
      }
      break;
    case PhiStrategy::multi01:
      for (int i = 0; i < n; ++i) {
        const double vo = d.other[i];
        if (vo > 0.0)
          th.push_back(sw[i] + wq * std::max({-vo, d.e11[i],
                                              -0.5 * (vo - d.e20[i]),
                                              0.5 * d.e21[i]}));
      }
      break;
    case PhiStrategy::multi20:
      for (int i = 0; i < n; ++i) {
        const double vo = d.other[i];
        if (vo + d.e21[i] - d.e20[i] < 0.0)
          th.push_back(sw[i] + wq * std::min({0.5 * d.e20[i], d.e20[i],
                                              -0.5 * (vo - d.e20[i]),
                                              -(vo + d.e11[i] - d.e20[i])}));
      }
      break;
    case PhiStrategy::multi21:
      for (int i = 0; i < n; ++i) {
        const double vo = d.other[i];
        if (vo + d.e21[i] - d.e20[i] > 0.0)
          th.push_back(sw[i] + wq * std::min({0.5 * (vo + d.e21[i]),
                                              vo + d.e21[i], 0.5 * d.e21[i],
                                              d.e21[i] - d.e11[i]}));
      }
      break;
  }
  std::sort(th.begin(), th.end());
  return th;
}

double sweep_count_value(PhiStrategy strategy, const std::vector<double>& th,
                         double u, int n_draws) {
  std::ptrdiff_t count = 0;
  switch (strategy) {
    case PhiStrategy::pcm:
    case PhiStrategy::blp:
    case PhiStrategy::bundle11:
    case PhiStrategy::multi20:
    case PhiStrategy::multi21:
      // Demand counts draws with threshold strictly above the offset.
      count = th.end() - std::upper_bound(th.begin(), th.end(), u);
      return 1.0 - static_cast<double>(count) / n_draws;
    default:
      // Demand counts draws with threshold strictly below the offset.
      count = std::lower_bound(th.begin(), th.end(), u) - th.begin();
      return static_cast<double>(count) / n_draws;
  }
}

Sinogram assemble_impl(const ModelSpec& spec, const CoefficientDensity& density,
                       PhiStrategy strategy, int j, const ProductMenu& menu,
                       const SphereGrid& grid, const PhiOptions& opts,
                       std::vector<std::string>* violations, bool parallel) {
  spec.validate();
  menu.validate(spec);
  grid.validate();
  check_strategy(spec, strategy, j);
  require_config(opts.n_draws >= 1, "phi: n_draws must be >= 1");
  require_config(opts.truncation > 0.0, "phi: truncation must be positive");
  require_config(density.dim() == spec.structural_dim(),
                 "phi: density dimension must match the structural "
                 "coefficient count");
  require_config(grid.q == slot_dimension(spec, strategy),
                 "sinogram grid dimension must match the slot: d_x for "
                 "no-shock menus, d_x + 1 otherwise");

  ProductMenu pinned = menu;
  if (strategy == PhiStrategy::blp) {
    for (int k = 0; k < spec.n_goods; ++k)
      if (k != j) pinned.delta[k] = -opts.truncation;
  } else if (is_bundle_strategy(strategy)) {
    pinned.delta[1 - j] = pin_sign(strategy) * opts.truncation;
  }

  const SweepDraws draws =
      make_sweep_draws(spec, density, strategy, j, pinned, opts.n_draws,
                       opts.seed);

  const int D = grid.n_directions();
  const int K = grid.n_offsets;
  Sinogram out;
  out.grid = grid;
  out.phi.resize(D, K);
  std::vector<std::vector<std::string>> vio(violations ? D : 0);

  std::exception_ptr failure;
#pragma omp parallel for schedule(static) if (parallel)
  for (int d = 0; d < D; ++d) {
    try {
      const Eigen::VectorXd& w = grid.directions[d];
      const double wq = strategy == PhiStrategy::pcm ? 0.0 : w[grid.q - 1];
      const Eigen::VectorXd sw = draws.slot * w;
      const std::vector<double> th =
          direction_thresholds(strategy, draws, sw, wq);
      for (int k = 0; k < K; ++k)
        out.phi(d, k) =
            sweep_count_value(strategy, th, grid.offset(k), opts.n_draws);

      if (violations) {
        if (strategy != PhiStrategy::pcm && wq < kMinLastCoord) {
          std::ostringstream os;
          os << "direction " << d << ": taste-shock coordinate " << wq
             << " too small to realize a menu";
          vio[d].push_back(os.str());
        } else if (!opts.support.unbounded()) {
          for (int k = 0; k < K; ++k) {
            const ProductMenu realized =
                realize_menu(spec, strategy, j, menu, w, grid.offset(k));
            const std::string msg = opts.support.check(realized);
            if (!msg.empty()) {
              std::ostringstream os;
              os << "direction " << d << ", offset " << k << ": " << msg;
              vio[d].push_back(os.str());
            }
          }
        }
      }
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  if (violations)
    for (auto& v : vio)
      violations->insert(violations->end(), v.begin(), v.end());
  return out;
}

}  // namespace

bool SupportBox::unbounded() const {
  return x2_lo == -kInf && x2_hi == kInf && p_lo == -kInf && p_hi == kInf &&
         delta_lo == -kInf && delta_hi == kInf;
}

std::string SupportBox::check(const ProductMenu& menu) const {
  std::ostringstream os;
  for (int r = 0; r < menu.x2.rows(); ++r)
    for (int c = 0; c < menu.x2.cols(); ++c)
      if (!(menu.x2(r, c) >= x2_lo && menu.x2(r, c) <= x2_hi)) {
        os << "x2(" << r << "," << c << ") = " << menu.x2(r, c)
           << " outside [" << x2_lo << ", " << x2_hi << "]";
        return os.str();
      }
  for (int r = 0; r < menu.p.size(); ++r)
    if (!(menu.p[r] >= p_lo && menu.p[r] <= p_hi)) {
      os << "p(" << r << ") = " << menu.p[r] << " outside [" << p_lo << ", "
         << p_hi << "]";
      return os.str();
    }
  for (int r = 0; r < menu.delta.size(); ++r)
    if (!(menu.delta[r] >= delta_lo && menu.delta[r] <= delta_hi)) {
      os << "delta(" << r << ") = " << menu.delta[r] << " outside ["
         << delta_lo << ", " << delta_hi << "]";
      return os.str();
    }
  return {};
}

DemandOracle mc_demand_oracle(const ModelSpec& spec,
                              const CoefficientDensity& density, int n_draws,
                              std::uint64_t seed) {
  require_config(n_draws >= 1, "phi: n_draws must be >= 1");
  return [spec, density, n_draws, seed](const ProductMenu& menu) {
    return aggregate_shares_mc(spec, density, menu, n_draws, seed);
  };
}

double build_phi_pcm(const ModelSpec& spec, const DemandOracle& oracle, int j,
                     const ProductMenu& menu, const SupportBox& support) {
  spec.validate();
  menu.validate(spec);
  check_strategy(spec, PhiStrategy::pcm, j);
  require_config(spec.n_goods <= kMaxGoodsForSubsets,
                 "subset marginalization supports at most 20 goods");
  std::vector<int> others;
  for (int k = 0; k < spec.n_goods; ++k)
    if (k != j) others.push_back(k);
  double total = 0.0;
  const int n_subsets = 1 << others.size();
  for (int mask = 0; mask < n_subsets; ++mask) {
    std::vector<int> flip;
    for (size_t b = 0; b < others.size(); ++b)
      if (mask & (1 << b)) flip.push_back(others[b]);
    const ProductMenu mapped = marginalization_map(j, flip, menu);
    if (!support.unbounded()) {
      const std::string msg = support.check(mapped);
      if (!msg.empty())
        throw_config("reflected menu (goods " + flip_set_description(flip) +
                     " reflected through good " + std::to_string(j) +
                     ") leaves the demand support: " + msg);
    }
    const Eigen::VectorXd s = oracle(mapped);
    require_config(s.size() == spec.n_goods + 1,
                   "demand oracle returned the wrong number of alternatives");
    total += s[1 + j];
  }
  return 1.0 - total;
}

PhiValue build_phi_blp(const ModelSpec& spec, const DemandOracle& oracle,
                       int j, const ProductMenu& menu, const PhiOptions& opts) {
  spec.validate();
  menu.validate(spec);
  check_strategy(spec, PhiStrategy::blp, j);
  if (!opts.support.unbounded()) {
    const std::string msg = opts.support.check(menu);
    if (!msg.empty())
      throw_config("menu leaves the demand support: " + msg);
  }
  return with_truncation_diagnostic(opts, [&](double M) {
    ProductMenu pinned = menu;
    for (int k = 0; k < spec.n_goods; ++k)
      if (k != j) pinned.delta[k] = -M;
    const Eigen::VectorXd s = oracle(pinned);
    require_config(s.size() == spec.n_goods + 1,
                   "demand oracle returned the wrong number of alternatives");
    return 1.0 - s[1 + j];
  });
}

PhiValue build_phi_bundle(const ModelSpec& spec, const DemandOracle& oracle,
                          PhiStrategy strategy, int j, const ProductMenu& menu,
                          const PhiOptions& opts) {
  spec.validate();
  menu.validate(spec);
  require_config(is_bundle_strategy(strategy),
                 "build_phi_bundle expects a bundle or multi-unit strategy");
  check_strategy(spec, strategy, j);
  if (!opts.support.unbounded()) {
    const std::string msg = opts.support.check(menu);
    if (!msg.empty())
      throw_config("menu leaves the demand support: " + msg);
  }
  const int alt = strategy_alternative(strategy);
  const bool complement = strategy_complement(strategy);
  const double sign = pin_sign(strategy);
  return with_truncation_diagnostic(opts, [&](double M) {
    ProductMenu pinned = menu;
    pinned.delta[1 - j] = sign * M;
    const Eigen::VectorXd s = oracle(pinned);
    require_config(s.size() == spec.n_alternatives(),
                   "demand oracle returned the wrong number of alternatives");
    return complement ? 1.0 - s[alt] : s[alt];
  });
}

double marginalization_sum(const DemandOracle& oracle, int j,
                           const ProductMenu& menu, bool with_own_flip) {
  const int J = static_cast<int>(menu.p.size());
  require_config(j >= 0 && j < J,
                 "marginalization_sum: product index out of range");
  require_config(J <= kMaxGoodsForSubsets,
                 "subset marginalization supports at most 20 goods");
  std::vector<int> others;
  for (int k = 0; k < J; ++k)
    if (k != j) others.push_back(k);
  double total = 0.0;
  const int n_subsets = 1 << others.size();
  for (int mask = 0; mask < n_subsets; ++mask) {
    std::vector<int> flip;
    for (size_t b = 0; b < others.size(); ++b)
      if (mask & (1 << b)) flip.push_back(others[b]);
    const ProductMenu mapped = marginalization_map(j, flip, menu);
    Eigen::VectorXd s = oracle(mapped);
    require_config(s.size() > 1 + j,
                   "demand oracle returned too few alternatives");
    total += s[1 + j];
    if (with_own_flip) {
      s = oracle(own_flip_map(j, mapped));
      total += s[1 + j];
    }
  }
  return total;
}

ProductMenu realize_menu(const ModelSpec& spec, PhiStrategy strategy, int j,
                         const ProductMenu& menu, const Eigen::VectorXd& w,
                         double u) {
  spec.validate();
  menu.validate(spec);
  check_strategy(spec, strategy, j);
  const int q = slot_dimension(spec, strategy);
  require_config(static_cast<int>(w.size()) == q,
                 "realize_menu: direction length must match the slot "
                 "dimension");
  require_config(std::abs(w.norm() - 1.0) <= 1e-9,
                 "realize_menu: direction must have unit norm");
  const int db = spec.d_x - 1;
  ProductMenu out = menu;
  if (strategy == PhiStrategy::pcm) {
    out.x2.row(j) = w.head(db).transpose();
    out.p[j] = w[db];
    out.delta[j] = -u;
  } else {
    const double wq = w[q - 1];
    require_config(wq >= kMinLastCoord,
                   "realize_menu: taste-shock coordinate too small to "
                   "realize a menu");
    out.x2.row(j) = (w.head(db) / wq).transpose();
    out.p[j] = w[db] / wq;
    out.delta[j] = -u / wq;
  }
  return out;
}

Sinogram assemble_sinogram(const ModelSpec& spec,
                           const CoefficientDensity& density,
                           PhiStrategy strategy, int j,
                           const ProductMenu& menu, const SphereGrid& grid,
                           const PhiOptions& opts,
                           std::vector<std::string>* violations) {
  return assemble_impl(spec, density, strategy, j, menu, grid, opts,
                       violations, true);
}

Sinogram assemble_sinogram_serial(const ModelSpec& spec,
                                  const CoefficientDensity& density,
                                  PhiStrategy strategy, int j,
                                  const ProductMenu& menu,
                                  const SphereGrid& grid,
                                  const PhiOptions& opts,
                                  std::vector<std::string>* violations) {
  return assemble_impl(spec, density, strategy, j, menu, grid, opts,
                       violations, false);
}

}  // namespace rcd
