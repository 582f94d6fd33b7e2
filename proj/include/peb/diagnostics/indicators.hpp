#pragma once

#include <optional>
#include <string>
#include <vector>

#include "peb/diagnostics/fields.hpp"
#include "peb/diagnostics/grid.hpp"
#include "peb/physics/problem.hpp"

namespace peb::diagnostics {

// Axis-aligned squares of side `side` tiling [-1, 1]^2; every grid node and
// ring point belongs to exactly one square (hard partition of unity). Only
// squares meeting the closed disk are kept. h is the square's diagonal.
struct Patch {
  int id = 0;
  int ix = 0;
  int iy = 0;
  Point center;
  double h = 0.0;
  std::size_t n_interior = 0;
  std::size_t n_ring = 0;

  bool empty() const { return n_interior == 0 && n_ring == 0; }
};

struct PatchPartition {
  double side = 0.125;
  int per_axis = 0;
  std::vector<Patch> patches;
  std::vector<int> interior_patch;  // patch id of each grid node
  std::vector<int> ring_patch;      // patch id of each ring point
};

PatchPartition make_partition(const EvalGrid& grid, double side = 0.125);

struct IndicatorWeights {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double alpha3 = 1.0;
};

// eta_i^2 = a1 int |twist|^2 + a2 h_i^2 int div^2 + a3 h_i int_Gamma_i port^2.
struct IndicatorField {
  std::vector<double> eta_sq;
  std::vector<double> twist;
  std::vector<double> div;
  std::vector<double> port;
  std::vector<int> skipped;  // ids of empty patches
};

IndicatorField local_indicators(const ResidualFields& r, const EvalGrid& grid, const PatchPartition& partition,
                                const IndicatorWeights& alpha = {});

// Per-patch share of ||e||_E^2.
std::vector<double> local_energy(const ErrorJets& e, const EvalGrid& grid, const PatchPartition& partition,
                                 const physics::NonDimScheme& scheme);

struct TwoSidedOptions {
  double ratio_low = 1e-6;
  double ratio_high = 1e6;
  double min_spearman = 0.8;
  double top_fraction = 0.2;
};

struct TwoSidedReport {
  bool vacuous = false;  // no error energy and no residual anywhere
  bool passed = false;
  double energy = 0.0;   // ||e||_E^2
  double eta_total = 0.0;
  std::optional<double> global_ratio;  // energy / sum eta_i^2
  std::optional<double> ratio_min, ratio_median, ratio_max;  // local energy / eta_i^2
  std::optional<double> spearman;
  int argmax_patch = -1;                // patch holding max |e| over grid and ring
  std::optional<double> argmax_rank;    // its rank fraction in descending eta order, in (0, 1]
  std::string note;
};

TwoSidedReport two_sided_check(const IndicatorField& eta, const ErrorJets& e, const EvalGrid& grid,
                               const PatchPartition& partition, const physics::NonDimScheme& scheme,
                               const TwoSidedOptions& options = {});

}  // namespace peb::diagnostics
