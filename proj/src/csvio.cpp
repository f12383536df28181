#include "rcdemand/csvio.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "rcdemand/common.hpp"

namespace rcd {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& field, const std::string& context) {
  const char* s = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  require_config(end != s && *end == '\0',
                 "csv: cannot parse '" + field + "' as a number in " + context);
  return v;
}

long parse_int(const std::string& field, const std::string& context) {
  const char* s = field.c_str();
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  require_config(end != s && *end == '\0',
                 "csv: cannot parse '" + field + "' as an integer in " + context);
  return v;
}

std::vector<std::vector<std::string>> read_rows(std::istream& is) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_fields(line));
  }
  require_config(!rows.empty(), "csv: input is empty");
  return rows;
}

void expect_column(const std::vector<std::string>& header, std::size_t pos,
                   const std::string& name) {
  require_config(pos < header.size() && header[pos] == name,
                 "csv: expected column '" + name + "' at position " +
                     std::to_string(pos) + " of the header");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  require_config(os.good(), "csv: cannot open '" + path + "' for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  require_config(is.good(), "csv: cannot open '" + path + "' for reading");
  return is;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_panel_csv(std::ostream& os, const MarketPanel& panel) {
  panel.validate();
  os << "t,j,x1";
  for (int k = 1; k < panel.d_x; ++k) os << ",x2_" << k;
  os << ",p,xi,delta";
  for (int k = 1; k <= panel.d_z; ++k) os << ",z_" << k;
  for (const std::string& lab : panel.share_labels) os << ",s_" << lab;
  os << "\n";
  for (std::size_t t = 0; t < panel.markets.size(); ++t) {
    const Market& m = panel.markets[t];
    for (int j = 0; j < panel.n_goods; ++j) {
      os << t << "," << j << "," << format_double(m.x1[j]);
      for (int k = 0; k < panel.d_x - 1; ++k)
        os << "," << format_double(m.x2(j, k));
      os << "," << format_double(m.p[j]) << "," << format_double(m.xi[j])
         << "," << format_double(m.delta[j]);
      for (int k = 0; k < panel.d_z; ++k) os << "," << format_double(m.z(j, k));
      for (int a = 0; a < m.shares.size(); ++a)
        os << "," << format_double(m.shares[a]);
      os << "\n";
    }
  }
  require_config(os.good(), "csv: write failed");
}

MarketPanel read_panel_csv(std::istream& is) {
  const auto rows = read_rows(is);
  const auto& header = rows[0];

  // Header layout: t, j, x1, x2_*, p, xi, delta, z_*, s_*.
  expect_column(header, 0, "t");
  expect_column(header, 1, "j");
  expect_column(header, 2, "x1");
  std::size_t pos = 3;
  int dx2 = 0;
  while (pos < header.size() &&
         header[pos] == "x2_" + std::to_string(dx2 + 1)) {
    ++dx2;
    ++pos;
  }
  expect_column(header, pos, "p");
  expect_column(header, pos + 1, "xi");
  expect_column(header, pos + 2, "delta");
  pos += 3;
  int dz = 0;
  while (pos < header.size() && header[pos] == "z_" + std::to_string(dz + 1)) {
    ++dz;
    ++pos;
  }
  require_config(dz >= 1, "csv: panel header needs at least one z_ column");
  std::vector<std::string> labels;
  while (pos < header.size() && header[pos].rfind("s_", 0) == 0) {
    labels.push_back(header[pos].substr(2));
    ++pos;
  }
  require_config(pos == header.size(),
                 "csv: unexpected trailing column '" +
                     (pos < header.size() ? header[pos] : "") + "'");
  require_config(!labels.empty(), "csv: panel header has no share columns");
  const std::size_t width = header.size();

  MarketPanel panel;
  panel.d_x = dx2 + 1;
  panel.d_z = dz;
  panel.share_labels = labels;

  // Group data rows into markets: a new t value starts a new market.
  std::vector<std::vector<const std::vector<std::string>*>> groups;
  long prev_t = -1;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    require_config(rows[r].size() == width,
                   "csv: row " + std::to_string(r) + " has " +
                       std::to_string(rows[r].size()) + " fields, expected " +
                       std::to_string(width));
    const std::string ctx = "row " + std::to_string(r);
    const long t = parse_int(rows[r][0], ctx);
    if (t != prev_t) {
      require_config(t == static_cast<long>(groups.size()),
                     "csv: market ids must be consecutive from 0; saw " +
                         std::to_string(t));
      groups.emplace_back();
      prev_t = t;
    }
    groups.back().push_back(&rows[r]);
  }
  require_config(!groups.empty(), "csv: panel has no data rows");
  const int n_goods = static_cast<int>(groups[0].size());
  panel.n_goods = n_goods;

  // Resolve the menu from the label set.
  const std::vector<std::string> bundle{"00", "10", "01", "11"};
  const std::vector<std::string> multiunit{"00", "10", "01", "11", "20", "21"};
  if (labels == bundle) {
    panel.menu = MenuKind::bundles2;
  } else if (labels == multiunit) {
    panel.menu = MenuKind::multiunit2;
  } else {
    std::vector<std::string> mn;
    for (int a = 0; a <= n_goods; ++a) mn.push_back(std::to_string(a));
    require_config(labels == mn,
                   "csv: share labels match no known menu for " +
                       std::to_string(n_goods) + " goods");
    panel.menu = MenuKind::multinomial;
  }

  for (std::size_t t = 0; t < groups.size(); ++t) {
    require_config(static_cast<int>(groups[t].size()) == n_goods,
                   "csv: market " + std::to_string(t) + " has " +
                       std::to_string(groups[t].size()) +
                       " rows, expected " + std::to_string(n_goods));
    Market m;
    m.x1.resize(n_goods);
    m.p.resize(n_goods);
    m.xi.resize(n_goods);
    m.delta.resize(n_goods);
    m.shares.resize(static_cast<int>(labels.size()));
    m.x2.resize(n_goods, dx2);
    m.z.resize(n_goods, dz);
    for (int j = 0; j < n_goods; ++j) {
      const auto& f = *groups[t][j];
      const std::string ctx =
          "market " + std::to_string(t) + " good " + std::to_string(j);
      require_config(parse_int(f[1], ctx) == j,
                     "csv: goods must be numbered 0.. in order within " + ctx);
      std::size_t c = 2;
      m.x1[j] = parse_double(f[c++], ctx);
      for (int k = 0; k < dx2; ++k) m.x2(j, k) = parse_double(f[c++], ctx);
      m.p[j] = parse_double(f[c++], ctx);
      m.xi[j] = parse_double(f[c++], ctx);
      m.delta[j] = parse_double(f[c++], ctx);
      for (int k = 0; k < dz; ++k) m.z(j, k) = parse_double(f[c++], ctx);
      for (int a = 0; a < static_cast<int>(labels.size()); ++a) {
        const double s = parse_double(f[c++], ctx);
        if (j == 0)
          m.shares[a] = s;
        else
          require_config(s == m.shares[a],
                         "csv: share columns must repeat identically across "
                         "the rows of market " + std::to_string(t));
      }
    }
    panel.markets.push_back(std::move(m));
  }
  panel.validate();
  return panel;
}

void write_sinogram_csv(std::ostream& os, const Sinogram& sino) {
  sino.validate();
  const int q = sino.grid.q;
  for (int k = 1; k <= q; ++k) os << (k == 1 ? "w_1" : ",w_" + std::to_string(k));
  os << ",u,phi,dphi\n";
  const bool has_d = sino.has_dphi();
  for (int d = 0; d < sino.grid.n_directions(); ++d) {
    for (int k = 0; k < sino.grid.n_offsets; ++k) {
      for (int c = 0; c < q; ++c) {
        if (c) os << ",";
        os << format_double(sino.grid.directions[d][c]);
      }
      os << "," << format_double(sino.grid.offset(k)) << ","
         << format_double(sino.phi(d, k)) << ","
         << (has_d ? format_double(sino.dphi(d, k)) : std::string("nan"))
         << "\n";
    }
  }
  require_config(os.good(), "csv: write failed");
}

Sinogram read_sinogram_csv(std::istream& is) {
  const auto rows = read_rows(is);
  const auto& header = rows[0];
  int q = 0;
  std::size_t pos = 0;
  while (pos < header.size() && header[pos] == "w_" + std::to_string(q + 1)) {
    ++q;
    ++pos;
  }
  require_config(q >= 1, "csv: sinogram header needs w_ columns");
  expect_column(header, pos, "u");
  expect_column(header, pos + 1, "phi");
  expect_column(header, pos + 2, "dphi");
  require_config(header.size() == pos + 3,
                 "csv: sinogram header has unexpected extra columns");
  const std::size_t n_rows = rows.size() - 1;
  require_config(n_rows >= 2, "csv: sinogram needs at least two data rows");

  // Offsets per direction: rows until the direction vector changes.
  auto direction_of = [&](std::size_t r) {
    Eigen::VectorXd w(q);
    const std::string ctx = "row " + std::to_string(r);
    for (int c = 0; c < q; ++c) w[c] = parse_double(rows[r][c], ctx);
    return w;
  };
  std::size_t n_off = 1;
  const Eigen::VectorXd w0 = direction_of(1);
  while (n_off < n_rows && direction_of(1 + n_off) == w0) ++n_off;
  require_config(n_off >= 2 && n_rows % n_off == 0,
                 "csv: sinogram rows do not factor into directions x offsets");
  const std::size_t n_dir = n_rows / n_off;

  Sinogram sino;
  sino.grid.q = q;
  sino.grid.n_offsets = static_cast<int>(n_off);
  sino.grid.u_min = parse_double(rows[1][q], "row 1");
  sino.grid.u_max = parse_double(rows[n_off][q], "row " + std::to_string(n_off));
  sino.phi.resize(n_dir, n_off);
  Eigen::MatrixXd dphi(n_dir, n_off);
  bool any_nan = false, any_finite = false;
  for (std::size_t d = 0; d < n_dir; ++d) {
    const std::size_t base = 1 + d * n_off;
    sino.grid.directions.push_back(direction_of(base));
    for (std::size_t k = 0; k < n_off; ++k) {
      const std::size_t r = base + k;
      const std::string ctx = "row " + std::to_string(r);
      for (int c = 0; c < q; ++c)
        require_config(parse_double(rows[r][c], ctx) ==
                           sino.grid.directions[d][c],
                       "csv: direction changes mid-block at " + ctx);
      const double u = parse_double(rows[r][q], ctx);
      require_config(std::abs(u - sino.grid.offset(static_cast<int>(k))) <=
                         1e-9 * std::max(1.0, std::abs(u)),
                     "csv: offsets are not on a uniform lattice at " + ctx);
      sino.phi(d, k) = parse_double(rows[r][q + 1], ctx);
      const double dv = parse_double(rows[r][q + 2], ctx);
      dphi(d, k) = dv;
      (std::isnan(dv) ? any_nan : any_finite) = true;
    }
  }
  require_config(!(any_nan && any_finite),
                 "csv: dphi must be all nan (absent) or all finite");
  if (any_finite) sino.dphi = std::move(dphi);
  sino.validate();
  return sino;
}

void write_grid_csv(std::ostream& os, const DensityGrid& grid) {
  require_config(grid.dim() >= 1, "csv: empty grid");
  os << "dim," << grid.dim() << "\n";
  for (int d = 0; d < grid.dim(); ++d)
    os << "axis," << d << "," << format_double(grid.axis(d).lo) << ","
       << format_double(grid.axis(d).hi) << "," << grid.axis(d).n << "\n";
  os << "values\n";
  for (std::int64_t i = 0; i < grid.size(); ++i)
    os << format_double(grid[i]) << "\n";
  require_config(os.good(), "csv: write failed");
}

DensityGrid read_grid_csv(std::istream& is) {
  const auto rows = read_rows(is);
  require_config(rows[0].size() == 2 && rows[0][0] == "dim",
                 "csv: grid file must start with a dim line");
  const long dim = parse_int(rows[0][1], "dim line");
  require_config(dim >= 1 && 1 + dim < static_cast<long>(rows.size()),
                 "csv: grid dim is inconsistent with the header block");
  std::vector<GridAxis> axes;
  for (long d = 0; d < dim; ++d) {
    const auto& f = rows[1 + d];
    const std::string ctx = "axis line " + std::to_string(d);
    require_config(f.size() == 5 && f[0] == "axis" &&
                       parse_int(f[1], ctx) == d,
                   "csv: malformed " + ctx);
    GridAxis ax;
    ax.lo = parse_double(f[2], ctx);
    ax.hi = parse_double(f[3], ctx);
    ax.n = static_cast<int>(parse_int(f[4], ctx));
    axes.push_back(ax);
  }
  require_config(rows[1 + dim].size() == 1 && rows[1 + dim][0] == "values",
                 "csv: expected a values marker after the axis block");
  DensityGrid grid(axes);
  const std::size_t first = 2 + dim;
  require_config(static_cast<std::int64_t>(rows.size() - first) == grid.size(),
                 "csv: grid has " + std::to_string(rows.size() - first) +
                     " values, expected " + std::to_string(grid.size()));
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    const auto& f = rows[first + i];
    require_config(f.size() == 1, "csv: one value per line expected");
    grid[i] = parse_double(f[0], "value " + std::to_string(i));
  }
  return grid;
}

void write_panel_csv(const std::string& path, const MarketPanel& panel) {
  auto os = open_out(path);
  write_panel_csv(os, panel);
}
MarketPanel read_panel_csv(const std::string& path) {
  auto is = open_in(path);
  return read_panel_csv(is);
}
void write_sinogram_csv(const std::string& path, const Sinogram& sino) {
  auto os = open_out(path);
  write_sinogram_csv(os, sino);
}
Sinogram read_sinogram_csv(const std::string& path) {
  auto is = open_in(path);
  return read_sinogram_csv(is);
}
void write_grid_csv(const std::string& path, const DensityGrid& grid) {
  auto os = open_out(path);
  write_grid_csv(os, grid);
}
DensityGrid read_grid_csv(const std::string& path) {
  auto is = open_in(path);
  return read_grid_csv(is);
}

}  // namespace rcd
