#pragma once

#include <optional>
#include <vector>

#include "peb/diagnostics/fields.hpp"
#include "peb/diagnostics/grid.hpp"
#include "peb/diagnostics/indicators.hpp"

namespace peb::diagnostics {

struct DensityMaps {
  double bandwidth = 0.0;
  std::vector<double> energy;    // smoothed |grad e|^2 + Bi e^2 (boundary part), on grid nodes
  std::vector<double> residual;  // smoothed a1 |twist|^2 + a2 h^2 div^2 + a3 h port^2
  // Extremes of residual/energy over the inner half of every patch, where
  // the energy map is positive.
  std::optional<double> core_ratio_min;
  std::optional<double> core_ratio_max;
};

// Gaussian smoothing of point masses onto the grid. Each interior node
// carries density * cell_area and each ring point density * ds; the mass is
// spread with a kernel truncated at three bandwidths and renormalized over
// the mask, so the integral of every map equals the integral of its source.
// The default bandwidth is half the patch scale h_i. A bandwidth below the
// grid spacing throws ResolutionError.
DensityMaps smoothed_density_maps(const ResidualFields& r, const ErrorJets& e, const EvalGrid& grid,
                                  const PatchPartition& partition, const physics::NonDimScheme& scheme,
                                  std::optional<double> bandwidth = std::nullopt,
                                  const IndicatorWeights& alpha = {});

// The smoothing operator alone: interior and ring densities in, smoothed
// density on the grid nodes out.
std::vector<double> smooth_density(const std::vector<double>& interior_density,
                                   const std::vector<double>& ring_density, const EvalGrid& grid, double bandwidth);

}  // namespace peb::diagnostics
