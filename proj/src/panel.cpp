#include "rcdemand/panel.hpp"

#include <cmath>
#include <string>

#include "rcdemand/common.hpp"
#include "rcdemand/demand.hpp"
#include "rcdemand/rng.hpp"

namespace rcd {

void MarketPanel::validate() const {
  require_config(n_goods >= 1, "panel: n_goods must be >= 1");
  require_config(d_x >= 1, "panel: d_x must be >= 1");
  require_config(d_z >= 1, "panel: d_z must be >= 1");
  require_config(!markets.empty(), "panel: no markets");
  require_config(!share_labels.empty(), "panel: no share labels");
  for (std::size_t t = 0; t < markets.size(); ++t) {
    const Market& m = markets[t];
    const std::string at = " at market " + std::to_string(t);
    require_config(m.x1.size() == n_goods && m.p.size() == n_goods &&
                       m.xi.size() == n_goods && m.delta.size() == n_goods,
                   "panel: per-good column has wrong length" + at);
    require_config(m.x2.rows() == n_goods && m.x2.cols() == d_x - 1,
                   "panel: x2 has wrong shape" + at);
    require_config(m.z.rows() == n_goods && m.z.cols() == d_z,
                   "panel: z has wrong shape" + at);
    require_config(
        static_cast<std::size_t>(m.shares.size()) == share_labels.size(),
        "panel: share vector does not match the label list" + at);
    double total = 0.0;
    for (int k = 0; k < m.shares.size(); ++k) {
      require_config(m.shares[k] >= 0.0 && m.shares[k] <= 1.0,
                     "panel: share outside [0, 1]" + at);
      total += m.shares[k];
    }
    require_config(std::abs(total - 1.0) <= 1e-6,
                   "panel: shares do not sum to 1" + at);
    require_config((m.delta - m.x1 - m.xi).lpNorm<Eigen::Infinity>() <= 1e-10,
                   "panel: delta must equal x1 + xi" + at);
  }
}

void PanelDgp::validate() const {
  require_config(x1_sd >= 0.0 && z_sd >= 0.0 && xi_sd >= 0.0 &&
                     price_noise_sd >= 0.0,
                 "panel dgp: standard deviations must be >= 0");
  require_config(x2_hi > x2_lo, "panel dgp: x2 range is empty");
  require_config(d_z >= 1, "panel dgp: d_z must be >= 1");
  require_config(share_draws >= 1, "panel dgp: share_draws must be >= 1");
}

MarketPanel generate_panel(const ModelSpec& spec,
                           const CoefficientDensity& density, int n_markets,
                           const PanelDgp& dgp, std::uint64_t seed) {
  spec.validate();
  dgp.validate();
  require_config(n_markets >= 1, "generate_panel: n_markets must be >= 1");
  require_config(density.dim() == spec.structural_dim(),
                 "generate_panel: density dimension must match the "
                 "structural coefficient count");

  const int J = spec.n_goods;
  const int dx2 = spec.d_x - 1;
  MarketPanel panel;
  panel.menu = spec.menu;
  panel.n_goods = J;
  panel.d_x = spec.d_x;
  panel.d_z = dgp.d_z;
  panel.share_labels = spec.alternative_labels();
  panel.markets.resize(n_markets);

  // Covariate stream; per-good counter block: x1, x2 row, z row, xi, price
  // noise.
  const Stream st(seed, 4);
  const std::uint64_t good_stride = static_cast<std::uint64_t>(3 + dx2 + dgp.d_z);
  const std::uint64_t market_stride = static_cast<std::uint64_t>(J) * good_stride;

  for (int t = 0; t < n_markets; ++t) {
    Market& m = panel.markets[t];
    m.x1.resize(J);
    m.x2.resize(J, dx2);
    m.p.resize(J);
    m.xi.resize(J);
    m.z.resize(J, dgp.d_z);
    for (int j = 0; j < J; ++j) {
      std::uint64_t c = static_cast<std::uint64_t>(t) * market_stride +
                        static_cast<std::uint64_t>(j) * good_stride;
      m.x1[j] = dgp.x1_mean + dgp.x1_sd * st.normal(c++);
      for (int k = 0; k < dx2; ++k)
        m.x2(j, k) = dgp.x2_lo + (dgp.x2_hi - dgp.x2_lo) * st.uniform(c++);
      for (int k = 0; k < dgp.d_z; ++k) m.z(j, k) = dgp.z_sd * st.normal(c++);
      m.xi[j] = dgp.xi_sd * st.normal(c++);
      m.p[j] = dgp.price_base + dgp.rho * m.xi[j] + dgp.pi * m.z(j, 0) +
               dgp.price_noise_sd * st.normal(c++);
    }
    m.delta = m.x1 + m.xi;

    ProductMenu menu;
    menu.x2 = m.x2;
    menu.p = m.p;
    menu.delta = m.delta;
    m.shares = aggregate_shares_smoothed(spec, density, menu, dgp.share_draws,
                                         seed, dgp.halton);
  }
  panel.validate();
  return panel;
}

}  // namespace rcd
