#pragma once

#include <cstdint>
#include <span>

#include "peb/diagnostics/fields.hpp"
#include "peb/diagnostics/grid.hpp"
#include "peb/physics/problem.hpp"

namespace peb::diagnostics {

struct ErrorStats {
  double rmse = 0.0;
  double mae = 0.0;
  double mse = 0.0;
  double max_abs = 0.0;
};

// Over all entries of two equally sized fields; rmse = sqrt(mse).
ErrorStats error_stats(std::span<const double> pred, std::span<const double> ref);

// ||-du/dn - Bi u|| / ||Bi u|| in discrete L2 over the ring. Throws
// DegenerateReferenceError when the denominator is below 1e-14.
double relerr_port(std::span<const Jet2> u_ring, const EvalGrid& grid, const physics::NonDimScheme& scheme);

struct MetricsReport {
  ErrorStats u;        // dimensionless u units
  ErrorStats kelvin;   // physical temperature
  double relerr_boundary = 0.0;
  double energy_norm_sq = 0.0;  // ||e||_E^2
  double edge_ratio = 0.0;      // max|e| on r > 0.9 over max|e| on r <= 0.9
  double total_seconds = 0.0;
  double seconds_per_epoch = 0.0;
  std::uint64_t iterations = 0;
};

// Everything except the timing fields, which the caller fills in.
MetricsReport compute_metrics(const FieldSamples& samples, const EvalGrid& grid,
                              const physics::NonDimScheme& scheme);

}  // namespace peb::diagnostics
