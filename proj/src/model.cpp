#include "rcdemand/model.hpp"

#include <cmath>

#include "rcdemand/common.hpp"

namespace rcd {

EpsSpec EpsSpec::gumbel() { return EpsSpec{}; }

EpsSpec EpsSpec::normal(Eigen::MatrixXd cov) {
  EpsSpec e;
  e.family = Family::normal;
  e.cov = std::move(cov);
  return e;
}

EpsSpec EpsSpec::normal_iid(int n_goods) {
  return normal(Eigen::MatrixXd::Identity(n_goods, n_goods));
}

int ModelSpec::n_bundle_effects() const {
  switch (menu) {
    case MenuKind::multinomial: return 0;
    case MenuKind::bundles2: return 1;
    case MenuKind::multiunit2: return 3;
  }
  return 0;
}

int ModelSpec::n_alternatives() const {
  switch (menu) {
    case MenuKind::multinomial: return n_goods + 1;
    case MenuKind::bundles2: return 4;
    case MenuKind::multiunit2: return 6;
  }
  return 0;
}

int ModelSpec::structural_dim() const {
  return (d_x - 1) + 1 + n_bundle_effects();
}

std::vector<std::string> ModelSpec::alternative_labels() const {
  switch (menu) {
    case MenuKind::multinomial: {
      std::vector<std::string> out;
      for (int j = 0; j <= n_goods; ++j) out.push_back(std::to_string(j));
      return out;
    }
    case MenuKind::bundles2:
      return {"00", "10", "01", "11"};
    case MenuKind::multiunit2:
      return {"00", "10", "01", "11", "20", "21"};
  }
  return {};
}

void ModelSpec::validate() const {
  require_config(n_goods >= 1, "model: n_goods must be >= 1");
  require_config(d_x >= 1, "model: d_x must be >= 1");
  require_config(sigma_eps == 0.0 || sigma_eps == 1.0,
                 "model: sigma_eps must be 0 or 1");
  if (menu != MenuKind::multinomial)
    require_config(n_goods == 2, "model: bundle menus require exactly 2 goods");
  if (eps.family == EpsSpec::Family::normal) {
    require_config(eps.cov.rows() == n_goods && eps.cov.cols() == n_goods,
                   "model: eps covariance must be n_goods x n_goods");
    Eigen::LLT<Eigen::MatrixXd> llt(eps.cov);
    require_config(llt.info() == Eigen::Success,
                   "model: eps covariance must be positive definite");
  }
}

void ProductMenu::validate(const ModelSpec& spec) const {
  require_config(x2.rows() == spec.n_goods && x2.cols() == spec.d_x - 1,
                 "menu: x2 must be n_goods x (d_x - 1)");
  require_config(p.size() == spec.n_goods, "menu: p length mismatch");
  require_config(delta.size() == spec.n_goods, "menu: delta length mismatch");
  require_config(x2.allFinite() && p.allFinite() && delta.allFinite(),
                 "menu: non-finite entry");
}

Eigen::VectorXd utilities(const ModelSpec& spec, const CoefficientDraw& draw,
                          const ProductMenu& menu) {
  require_config(draw.beta2.size() == spec.d_x - 1,
                 "utilities: beta2 length mismatch");
  require_config(draw.bundle_effects.size() == spec.n_bundle_effects(),
                 "utilities: bundle_effects length mismatch");
  const int J = spec.n_goods;
  Eigen::VectorXd v(J);  // single-unit utility of each good
  for (int j = 0; j < J; ++j) {
    double e = draw.eps.size() > j ? draw.eps[j] : 0.0;
    v[j] = menu.x2.row(j).dot(draw.beta2) + draw.alpha * menu.p[j] +
           menu.delta[j] + spec.sigma_eps * e;
  }
  Eigen::VectorXd u(spec.n_alternatives());
  u[0] = 0.0;
  switch (spec.menu) {
    case MenuKind::multinomial:
      u.tail(J) = v;
      break;
    case MenuKind::bundles2: {
      double d = draw.bundle_effects[0];
      u[1] = v[0];
      u[2] = v[1];
      u[3] = v[0] + v[1] + d;
      break;
    }
    case MenuKind::multiunit2: {
      double d11 = draw.bundle_effects[0];
      double d20 = draw.bundle_effects[1];
      double d21 = draw.bundle_effects[2];
      u[1] = v[0];
      u[2] = v[1];
      u[3] = v[0] + v[1] + d11;
      u[4] = 2.0 * v[0] + d20;
      u[5] = 2.0 * v[0] + v[1] + d21;
      break;
    }
  }
  return u;
}

int choose(const Eigen::VectorXd& u) {
  require_config(u.size() > 0, "choose: empty utility vector");
  require_numerical(!u.hasNaN(), "choose: NaN utility");
  int best = 0;
  for (int i = 1; i < u.size(); ++i)
    if (u[i] > u[best]) best = i;
  return best;
}

bool multiunit_neighbors_beaten(const Eigen::VectorXd& u, int chosen) {
  // Quantity pairs in label order {00,10,01,11,20,21}.
  static const int q1[6] = {0, 1, 0, 1, 2, 2};
  static const int q2[6] = {0, 0, 1, 1, 0, 1};
  for (int alt = 0; alt < 6; ++alt) {
    if (alt == chosen) continue;
    int d = std::abs(q1[alt] - q1[chosen]) + std::abs(q2[alt] - q2[chosen]);
    if (d == 1 && u[alt] > u[chosen]) return false;
  }
  return true;
}

std::vector<CoefficientDraw> sample_coefficients(const ModelSpec& spec,
                                                 const CoefficientDensity& density,
                                                 int n, std::uint64_t seed) {
  require_config(n >= 1, "sample_coefficients: n must be >= 1");
  require_config(density.dim() == spec.structural_dim(),
                 "sample_coefficients: density dimension must match the "
                 "structural coefficient count");
  Stream st(seed, 0);
  std::vector<CoefficientDraw> out(n);
  std::vector<double> theta(density.dim());
  for (int i = 0; i < n; ++i) {
    density.sample(st, static_cast<std::uint64_t>(i), theta.data());
    structural_to_draw(spec, theta.data(), out[i]);
    out[i].eps = Eigen::VectorXd::Zero(spec.n_goods);
  }
  return out;
}

void structural_to_draw(const ModelSpec& spec, const double* theta,
                        CoefficientDraw& draw) {
  const int db = spec.d_x - 1;
  draw.beta2 = Eigen::Map<const Eigen::VectorXd>(theta, db);
  draw.alpha = theta[db];
  draw.bundle_effects = Eigen::Map<const Eigen::VectorXd>(
      theta + db + 1, spec.n_bundle_effects());
}

}  // namespace rcd
