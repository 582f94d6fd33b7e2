#pragma once

#include <span>
#include <vector>

#include "peb/geometry.hpp"

namespace peb::diagnostics {

// Uniform raster over [-1, 1]^2 plus a ring of equally spaced boundary points.
// Raster rows run top-down: row 0 is y = +1, column 0 is x = -1. A node is
// inside when x^2 + y^2 < 1. Each inside node carries the area of one cell;
// each ring point carries the arc length 2 pi / ring_size.
struct EvalGrid {
  int resolution = 0;
  double spacing = 0.0;
  double cell_area = 0.0;
  double ring_ds = 0.0;
  std::vector<Point> inside;           // masked nodes in raster order
  std::vector<std::size_t> raster_of;  // raster index (row * resolution + col) of inside[k]
  std::vector<Point> ring;

  std::size_t raster_size() const { return static_cast<std::size_t>(resolution) * resolution; }
  Point node(int row, int col) const;
  // Scatter masked values onto the full raster with `outside` elsewhere.
  std::vector<double> to_raster(std::span<const double> values, double outside) const;
};

EvalGrid make_grid(int resolution = 201, int ring_points = 720);

}  // namespace peb::diagnostics
