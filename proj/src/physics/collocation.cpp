#include "peb/physics/collocation.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "peb/errors.hpp"

namespace peb::physics {

namespace {

// splitmix64 finaliser; decorrelates the interior/boundary/iteration streams.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::vector<Point> sample_interior(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw DomainError("sample_interior needs n >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> pts;
  pts.reserve(n);
  while (pts.size() < n) {
    const double r = std::sqrt(unit(rng));
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    const Point p{r * std::cos(phi), r * std::sin(phi)};
    // cos/sin rounding can land a point with r ~ 1 - 1e-17 on the circle.
    if (p.x * p.x + p.y * p.y < 1.0) pts.push_back(p);
  }
  return pts;
}

std::vector<Point> sample_boundary(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw DomainError("sample_boundary needs n >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    pts.push_back({std::cos(phi), std::sin(phi)});
  }
  return pts;
}

CollocationSet make_collocation(std::size_t n_interior, std::size_t n_boundary, std::uint64_t seed,
                                ResamplePolicy policy) {
  CollocationSet set;
  set.interior = sample_interior(n_interior, seed);
  set.boundary = sample_boundary(n_boundary, mix(seed));
  set.interior_weight = std::numbers::pi / static_cast<double>(n_interior);
  set.boundary_weight = 2.0 * std::numbers::pi / static_cast<double>(n_boundary);
  set.seed = seed;
  set.policy = policy;
  return set;
}

CollocationSet collocation_for_iteration(const CollocationSet& base, std::uint64_t iteration) {
  if (base.policy == ResamplePolicy::Fixed || iteration == 0) return base;
  return make_collocation(base.interior.size(), base.boundary.size(), mix(base.seed ^ mix(iteration)),
                          base.policy);
}

}  // namespace peb::physics
