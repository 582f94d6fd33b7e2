#include "peb/diagnostics/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "peb/diagnostics/energy.hpp"
#include "peb/errors.hpp"
#include "peb/reference/reference.hpp"

namespace peb::diagnostics {

ErrorStats error_stats(std::span<const double> pred, std::span<const double> ref) {
  if (pred.size() != ref.size()) throw DomainError("fields have different shapes");
  if (pred.empty()) throw DomainError("error statistics of an empty field");
  ErrorStats s;
  double sq = 0.0;
  double ab = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - ref[i];
    sq += e * e;
    ab += std::abs(e);
    s.max_abs = std::max(s.max_abs, std::abs(e));
  }
  const double n = static_cast<double>(pred.size());
  s.mse = sq / n;
  s.rmse = std::sqrt(s.mse);
  s.mae = ab / n;
  return s;
}

double relerr_port(std::span<const Jet2> u, const EvalGrid& grid, const physics::NonDimScheme& scheme) {
  if (u.size() != grid.ring.size()) throw DomainError("ring jets do not match the grid");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const Point p = grid.ring[k];
    const double robin = scheme.Bi * u[k].v;
    const double r = -(p.x * u[k].gx + p.y * u[k].gy) - robin;
    num += r * r * grid.ring_ds;
    den += robin * robin * grid.ring_ds;
  }
  if (std::sqrt(den) < 1e-14) throw DegenerateReferenceError("boundary reference norm is zero");
  return std::sqrt(num / den);
}

MetricsReport compute_metrics(const FieldSamples& samples, const EvalGrid& grid,
                              const physics::NonDimScheme& scheme) {
  const std::size_t n = grid.inside.size();
  std::vector<double> pred(n), ref(n), pred_k(n), ref_k(n);
  double edge = 0.0;
  double core = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = grid.inside[k].radius();
    pred[k] = samples.interior[0][k].v;
    ref[k] = reference::analytic_u(r, scheme);
    pred_k[k] = scheme.to_physical_temperature(pred[k]);
    ref_k[k] = reference::analytic_T(r, scheme);
    const double e = std::abs(pred[k] - ref[k]);
    (r > 0.9 ? edge : core) = std::max(r > 0.9 ? edge : core, e);
  }
  MetricsReport m;
  m.u = error_stats(pred, ref);
  m.kelvin = error_stats(pred_k, ref_k);
  m.relerr_boundary = relerr_port(samples.ring[0], grid, scheme);
  m.energy_norm_sq = energy_norm_sq(error_jets(samples, grid, scheme), grid, scheme);
  m.edge_ratio = core > 0.0 ? edge / core : (edge > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  return m;
}

}  // namespace peb::diagnostics
