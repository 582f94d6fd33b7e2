#include "peb/diagnostics/grid.hpp"

#include <cmath>
#include <numbers>

#include "peb/errors.hpp"

namespace peb::diagnostics {

// Integer offsets from the centre keep the grid exactly symmetric and make
// the mask test exact: a node is inside when i^2 + j^2 < m^2.
Point EvalGrid::node(int row, int col) const {
  const int m = resolution - 1;
  return {static_cast<double>(2 * col - m) / m, static_cast<double>(m - 2 * row) / m};
}

std::vector<double> EvalGrid::to_raster(std::span<const double> values, double outside) const {
  if (values.size() != inside.size()) throw DomainError("field does not match the grid mask");
  std::vector<double> out(raster_size(), outside);
  for (std::size_t k = 0; k < values.size(); ++k) out[raster_of[k]] = values[k];
  return out;
}

EvalGrid make_grid(int resolution, int ring_points) {
  if (resolution < 3) throw DomainError("grid resolution must be at least 3");
  if (ring_points < 4) throw DomainError("ring needs at least 4 points");
  EvalGrid g;
  g.resolution = resolution;
  g.spacing = 2.0 / (resolution - 1);
  g.cell_area = g.spacing * g.spacing;
  g.ring_ds = 2.0 * std::numbers::pi / ring_points;
  for (int row = 0; row < resolution; ++row) {
    for (int col = 0; col < resolution; ++col) {
      const long m = resolution - 1, i = 2L * col - m, j = m - 2L * row;
      if (i * i + j * j < m * m) {
        g.inside.push_back(g.node(row, col));
        g.raster_of.push_back(static_cast<std::size_t>(row) * resolution + col);
      }
    }
  }
  g.ring.reserve(static_cast<std::size_t>(ring_points));
  for (int k = 0; k < ring_points; ++k) {
    const double phi = g.ring_ds * k;
    g.ring.push_back({std::cos(phi), std::sin(phi)});
  }
  return g;
}

}  // namespace peb::diagnostics
