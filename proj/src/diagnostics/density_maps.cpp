#include "peb/diagnostics/density_maps.hpp"

#include <algorithm>
#include <cmath>

#include "peb/errors.hpp"

namespace peb::diagnostics {

std::vector<double> smooth_density(const std::vector<double>& interior_density,
                                   const std::vector<double>& ring_density, const EvalGrid& grid, double bw) {
  if (!(bw >= grid.spacing)) throw ResolutionError("smoothing bandwidth is below the grid spacing");
  if (interior_density.size() != grid.inside.size() || ring_density.size() != grid.ring.size()) {
    throw DomainError("densities do not match the grid");
  }
  const int res = grid.resolution;
  std::vector<int> mask_index(grid.raster_size(), -1);
  for (std::size_t k = 0; k < grid.raster_of.size(); ++k) mask_index[grid.raster_of[k]] = static_cast<int>(k);

  const double reach = 3.0 * bw;
  const int span = static_cast<int>(std::ceil(reach / grid.spacing));
  std::vector<double> out(grid.inside.size(), 0.0);
  std::vector<std::pair<int, double>> stencil;

  auto deposit = [&](Point src, double mass) {
    if (mass == 0.0) return;
    const int col0 = static_cast<int>(std::lround((src.x + 1.0) / grid.spacing));
    const int row0 = static_cast<int>(std::lround((1.0 - src.y) / grid.spacing));
    stencil.clear();
    double total = 0.0;
    for (int row = std::max(0, row0 - span); row <= std::min(res - 1, row0 + span); ++row) {
      for (int col = std::max(0, col0 - span); col <= std::min(res - 1, col0 + span); ++col) {
        const int k = mask_index[static_cast<std::size_t>(row) * res + col];
        if (k < 0) continue;
        const Point q = grid.inside[static_cast<std::size_t>(k)];
        const double d2 = (q.x - src.x) * (q.x - src.x) + (q.y - src.y) * (q.y - src.y);
        if (d2 > reach * reach) continue;
        const double w = std::exp(-0.5 * d2 / (bw * bw));
        stencil.emplace_back(k, w);
        total += w;
      }
    }
    if (total == 0.0) throw ResolutionError("smoothing kernel misses the mask");
    for (const auto& [k, w] : stencil) out[static_cast<std::size_t>(k)] += mass * w / total;
  };

  for (std::size_t k = 0; k < grid.inside.size(); ++k) deposit(grid.inside[k], interior_density[k] * grid.cell_area);
  for (std::size_t k = 0; k < grid.ring.size(); ++k) deposit(grid.ring[k], ring_density[k] * grid.ring_ds);
  for (double& v : out) v /= grid.cell_area;
  return out;
}

DensityMaps smoothed_density_maps(const ResidualFields& r, const ErrorJets& e, const EvalGrid& grid,
                                  const PatchPartition& part, const physics::NonDimScheme& scheme,
                                  std::optional<double> bandwidth, const IndicatorWeights& a) {
  if (r.twist_sq.size() != grid.inside.size() || r.port.size() != grid.ring.size() ||
      e.interior.size() != grid.inside.size() || e.ring.size() != grid.ring.size()) {
    throw DomainError("fields do not match the grid");
  }
  auto h_at = [&](int patch) { return part.patches[static_cast<std::size_t>(patch)].h; };
  DensityMaps m;
  m.bandwidth = bandwidth ? *bandwidth : 0.5 * part.side * std::sqrt(2.0);

  std::vector<double> xi(grid.inside.size()), rho(grid.inside.size());
  for (std::size_t k = 0; k < grid.inside.size(); ++k) {
    const double h = h_at(part.interior_patch[k]);
    xi[k] = e.interior[k].gx * e.interior[k].gx + e.interior[k].gy * e.interior[k].gy;
    rho[k] = a.alpha1 * r.twist_sq[k] + a.alpha2 * h * h * r.div[k] * r.div[k];
  }
  std::vector<double> zeta(grid.ring.size()), rho_b(grid.ring.size());
  for (std::size_t k = 0; k < grid.ring.size(); ++k) {
    zeta[k] = scheme.Bi * e.ring[k].v * e.ring[k].v;
    rho_b[k] = a.alpha3 * h_at(part.ring_patch[k]) * r.port[k] * r.port[k];
  }
  m.energy = smooth_density(xi, zeta, grid, m.bandwidth);
  m.residual = smooth_density(rho, rho_b, grid, m.bandwidth);

  const double quarter = 0.25 * part.side;
  for (std::size_t k = 0; k < grid.inside.size(); ++k) {
    const Point c = part.patches[static_cast<std::size_t>(part.interior_patch[k])].center;
    const Point q = grid.inside[k];
    if (std::abs(q.x - c.x) > quarter || std::abs(q.y - c.y) > quarter) continue;
    if (!(m.energy[k] > 0.0)) continue;
    const double ratio = m.residual[k] / m.energy[k];
    m.core_ratio_min = m.core_ratio_min ? std::min(*m.core_ratio_min, ratio) : ratio;
    m.core_ratio_max = m.core_ratio_max ? std::max(*m.core_ratio_max, ratio) : ratio;
  }
  return m;
}

}  // namespace peb::diagnostics
