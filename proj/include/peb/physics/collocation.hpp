#pragma once

#include <cstdint>
#include <vector>

#include "peb/geometry.hpp"

namespace peb::physics {

enum class ResamplePolicy { Fixed, EveryIteration };

// Uniform i.i.d. points in the open unit disk (r = sqrt(U1), phi = 2 pi U2).
std::vector<Point> sample_interior(std::size_t n, std::uint64_t seed);
// Uniform i.i.d. angles on the unit circle.
std::vector<Point> sample_boundary(std::size_t n, std::uint64_t seed);

struct CollocationSet {
  std::vector<Point> interior;
  std::vector<Point> boundary;
  double interior_weight = 0.0;  // pi / N_int
  double boundary_weight = 0.0;  // 2 pi / N_bnd
  std::uint64_t seed = 0;
  ResamplePolicy policy = ResamplePolicy::Fixed;
};

CollocationSet make_collocation(std::size_t n_interior, std::size_t n_boundary, std::uint64_t seed,
                                ResamplePolicy policy = ResamplePolicy::Fixed);

// The set used at `iteration` (the original set under the Fixed policy).
CollocationSet collocation_for_iteration(const CollocationSet& base, std::uint64_t iteration);

}  // namespace peb::physics
