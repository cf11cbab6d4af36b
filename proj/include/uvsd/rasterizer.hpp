#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "uvsd/pixelizer.hpp"
#include "uvsd/rng.hpp"
#include "uvsd/types.hpp"

namespace uvsd {

struct RasterConfig {
  double gamma = 1.3;
  int canvas = 64;
  double brightness_cap = 5.0;
  double min_visible = 0.15;
};

// Eq. 5: grid cell edge length for a subspace with the given bounding-box
// extents and node count.
inline double cut_distance(double h_dis, double v_dis, std::size_t node_count, double gamma) {
  if (!(h_dis > 0) || !(v_dis > 0)) throw Error("cut_distance: extents must be > 0");
  if (node_count < 1) throw Error("cut_distance: node count must be >= 1");
  if (!(gamma > 0)) throw Error("cut_distance: gamma must be > 0");
  return std::sqrt(h_dis * v_dis / (static_cast<double>(node_count) * gamma));
}

// Bounding-box extents of the embedding plane; flat axes are expanded to 1.0
// so Eq. 5 never divides by zero.
inline std::array<double, 2> bounding_extents(const std::vector<std::array<double, 2>>& coords) {
  if (coords.empty()) throw Error("bounding_extents: no coordinates");
  double min_x = coords[0][0], max_x = coords[0][0];
  double min_y = coords[0][1], max_y = coords[0][1];
  for (const auto& c : coords) {
    min_x = std::min(min_x, c[0]);
    max_x = std::max(max_x, c[0]);
    min_y = std::min(min_y, c[1]);
    max_y = std::max(max_y, c[1]);
  }
  double h = max_x - min_x;
  double v = max_y - min_y;
  if (h <= 0) h = 1.0;
  if (v <= 0) v = 1.0;
  return {h, v};
}

struct GridCell {
  int col = 0;
  int row = 0;
  bool operator<(const GridCell& o) const {
    if (row != o.row) return row < o.row;
    return col < o.col;
  }
  bool operator==(const GridCell& o) const { return col == o.col && row == o.row; }
};

struct GridLayout {
  double cell_size = 1.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  int cols = 1;
  int rows = 1;
  // Row-major ordered occupancy. Pre-diffusion cells may hold several nodes;
  // after diffusion every cell holds exactly one.
  std::map<GridCell, std::vector<std::uint32_t>> cells;

  bool single_occupancy() const {
    for (const auto& [cell, nodes] : cells)
      if (nodes.size() != 1) return false;
    return true;
  }
  std::size_t node_count() const {
    std::size_t n = 0;
    for (const auto& [cell, nodes] : cells) n += nodes.size();
    return n;
  }
};

// Bins node coordinates into cells of edge length cell_size; the origin is
// the bounding-box minimum.
inline GridLayout assign_grid(const std::vector<std::array<double, 2>>& coords,
                              double cell_size) {
  if (coords.empty()) throw Error("assign_grid: no coordinates");
  if (!(cell_size > 0)) throw Error("assign_grid: cell_size must be > 0");
  for (const auto& c : coords)
    if (!std::isfinite(c[0]) || !std::isfinite(c[1]))
      throw Error("assign_grid: non-finite coordinate");

  GridLayout layout;
  layout.cell_size = cell_size;
  double min_x = coords[0][0], max_x = coords[0][0];
  double min_y = coords[0][1], max_y = coords[0][1];
  for (const auto& c : coords) {
    min_x = std::min(min_x, c[0]);
    max_x = std::max(max_x, c[0]);
    min_y = std::min(min_y, c[1]);
    max_y = std::max(max_y, c[1]);
  }
  layout.origin_x = min_x;
  layout.origin_y = min_y;
  layout.cols = static_cast<int>(std::floor((max_x - min_x) / cell_size)) + 1;
  layout.rows = static_cast<int>(std::floor((max_y - min_y) / cell_size)) + 1;
  for (std::uint32_t v = 0; v < coords.size(); ++v) {
    GridCell cell;
    cell.col = std::min(static_cast<int>(std::floor((coords[v][0] - min_x) / cell_size)),
                        layout.cols - 1);
    cell.row = std::min(static_cast<int>(std::floor((coords[v][1] - min_y) / cell_size)),
                        layout.rows - 1);
    layout.cells[cell].push_back(v);
  }
  return layout;
}

namespace detail {

// Cells of the ring at Chebyshev distance r, clockwise starting from the
// cell directly north (N, NE, E, SE, S, SW, W, NW for r=1).
inline std::vector<GridCell> ring_offsets(int r) {
  std::vector<GridCell> out;
  out.reserve(8 * r);
  for (int dx = 0; dx <= r; ++dx) out.push_back({dx, -r});         // north edge, eastward
  for (int dy = -r + 1; dy <= r; ++dy) out.push_back({r, dy});     // east edge, southward
  for (int dx = r - 1; dx >= -r; --dx) out.push_back({dx, r});     // south edge, westward
  for (int dy = r - 1; dy >= -r; --dy) out.push_back({-r, dy});    // west edge, northward
  for (int dx = -r + 1; dx < 0; ++dx) out.push_back({dx, -r});     // back to start
  return out;
}

}  // namespace detail

// Resolves multi-occupant cells: one node is retained by a seeded draw keyed
// on the cell, the rest spill clockwise into the nearest free cell, ring by
// ring. If probing exhausts the grid, the bounds grow one ring on each side
// and probing restarts.
inline GridLayout diffuse(const GridLayout& layout, std::uint64_t seed) {
  int min_col = 0, max_col = layout.cols - 1;
  int min_row = 0, max_row = layout.rows - 1;

  std::map<GridCell, int> occupied;  // current occupant count per cell
  for (const auto& [cell, nodes] : layout.cells) {
    if (cell.col < min_col || cell.col > max_col || cell.row < min_row || cell.row > max_row)
      throw Error("diffuse: cell outside the declared grid bounds");
    occupied[cell] = static_cast<int>(nodes.size());
  }

  auto is_free = [&](const GridCell& c) {
    if (c.col < min_col || c.col > max_col || c.row < min_row || c.row > max_row) return false;
    auto it = occupied.find(c);
    return it == occupied.end() || it->second == 0;
  };

  auto place_evictee = [&](const GridCell& from, std::uint32_t node,
                           std::map<GridCell, std::vector<std::uint32_t>>& settled) {
    for (;;) {
      const int span = std::max({from.col - min_col, max_col - from.col,
                                 from.row - min_row, max_row - from.row});
      for (int r = 1; r <= span; ++r) {
        for (const auto& off : detail::ring_offsets(r)) {
          const GridCell target{from.col + off.col, from.row + off.row};
          if (is_free(target)) {
            settled[target].push_back(node);
            occupied[target] = 1;
            return;
          }
        }
      }
      --min_col;
      ++max_col;
      --min_row;
      ++max_row;
    }
  };

  std::map<GridCell, std::vector<std::uint32_t>> settled;
  for (const auto& [cell, nodes] : layout.cells) {
    if (nodes.size() == 1) {
      settled[cell].push_back(nodes[0]);
      continue;
    }
    Rng rng(mix_seed(seed, (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cell.row)) << 32) |
                               static_cast<std::uint32_t>(cell.col)));
    const std::size_t keep = rng.below(nodes.size());
    settled[cell].push_back(nodes[keep]);
    occupied[cell] = 1;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (i == keep) continue;
      place_evictee(cell, nodes[i], settled);
    }
  }

  GridLayout out;
  out.cell_size = layout.cell_size;
  out.origin_x = layout.origin_x + min_col * layout.cell_size;
  out.origin_y = layout.origin_y + min_row * layout.cell_size;
  out.cols = max_col - min_col + 1;
  out.rows = max_row - min_row + 1;
  for (const auto& [cell, nodes] : settled)
    out.cells[{cell.col - min_col, cell.row - min_row}] = nodes;
  return out;
}

// Fixed-resolution 3-channel raster, values in [0,1], background exactly 0.
struct FrameImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // row-major, interleaved RGB

  float at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

// Maps each occupied cell to one canvas pixel. Channel value is
// (rgb/255) * clamp(brightness/brightness_cap, min_visible, 1); the grid is
// centered on the square canvas.
inline FrameImage render_frame(const GridLayout& layout,
                               const std::vector<UserPixel>& pixels,
                               const RasterConfig& config) {
  const int r = config.canvas;
  if (r < 1) throw Error("render_frame: canvas must be >= 1");
  FrameImage img;
  img.width = r;
  img.height = r;
  img.data.assign(static_cast<std::size_t>(r) * r * 3, 0.0f);
  if (layout.cells.empty()) return img;
  if (!layout.single_occupancy())
    throw Error("render_frame: layout has multi-occupant cells (run diffuse first)");
  if (layout.cols > r || layout.rows > r)
    throw Error("render_frame: grid " + std::to_string(layout.cols) + "x" +
                std::to_string(layout.rows) + " exceeds canvas; need at least R=" +
                std::to_string(std::max(layout.cols, layout.rows)));
  const int off_x = (r - layout.cols) / 2;
  const int off_y = (r - layout.rows) / 2;
  for (const auto& [cell, nodes] : layout.cells) {
    const std::uint32_t v = nodes[0];
    if (v >= pixels.size()) throw Error("render_frame: node without a UserPixel");
    const UserPixel& px = pixels[v];
    const double factor =
        std::clamp(px.brightness / config.brightness_cap, config.min_visible, 1.0);
    for (int c = 0; c < 3; ++c)
      img.at(off_y + cell.row, off_x + cell.col, c) =
          static_cast<float>(px.rgb[c] / 255.0 * factor);
  }
  return img;
}

}  // namespace uvsd
