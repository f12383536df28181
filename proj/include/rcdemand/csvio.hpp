// CSV serialization for market panels, sinograms, and density grids.  Every
// number is written with 17 significant digits, so a write-then-read round
// trip reproduces the doubles exactly.
//
// Formats (one header line, comma separators, one record per line):
//   MarketPanel: t, j, x1, x2_1..x2_{d_x-1}, p, xi, delta, z_1..z_{d_z},
//                s_<label>...; one row per (market, good), share columns
//                repeated across a market's rows.
//   Sinogram:    w_1..w_q, u, phi, dphi; one row per (direction, offset),
//                offsets fastest; dphi is written as nan when the sinogram
//                has not been differentiated yet.
//   DensityGrid: a "dim,<q>" line, one "axis,<d>,<lo>,<hi>,<n>" line per
//                axis, a "values" marker, then the flattened values (row
//                major, last axis fastest), one per line.

#pragma once

#include <iosfwd>
#include <string>

#include "rcdemand/grid.hpp"
#include "rcdemand/panel.hpp"
#include "rcdemand/radon.hpp"

namespace rcd {

void write_panel_csv(std::ostream& os, const MarketPanel& panel);
MarketPanel read_panel_csv(std::istream& is);
void write_panel_csv(const std::string& path, const MarketPanel& panel);
MarketPanel read_panel_csv(const std::string& path);

void write_sinogram_csv(std::ostream& os, const Sinogram& sino);
Sinogram read_sinogram_csv(std::istream& is);
void write_sinogram_csv(const std::string& path, const Sinogram& sino);
Sinogram read_sinogram_csv(const std::string& path);

void write_grid_csv(std::ostream& os, const DensityGrid& grid);
DensityGrid read_grid_csv(std::istream& is);
void write_grid_csv(const std::string& path, const DensityGrid& grid);
DensityGrid read_grid_csv(const std::string& path);

// Shared formatting helper: shortest representation that restores the exact
// double ("%.17g").
std::string format_double(double v);

}  // namespace rcd
