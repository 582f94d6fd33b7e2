#include "peb/diagnostics/energy.hpp"

#include "peb/errors.hpp"

namespace peb::diagnostics {

namespace {

void check(const ErrorJets& e, const EvalGrid& grid) {
  if (e.interior.size() != grid.inside.size() || e.ring.size() != grid.ring.size()) {
    throw DomainError("error jets do not match the grid");
  }
}

}  // namespace

double energy_norm_sq(const ErrorJets& e, const EvalGrid& grid, const physics::NonDimScheme& scheme) {
  check(e, grid);
  double bulk = 0.0;
  for (const Jet2& j : e.interior) bulk += j.gx * j.gx + j.gy * j.gy;
  double trace = 0.0;
  for (const Jet2& j : e.ring) trace += j.v * j.v;
  return bulk * grid.cell_area + scheme.Bi * trace * grid.ring_ds;
}

EnergyFunctional energy_functional(const ErrorJets& e, const EvalGrid& grid, const physics::LossWeights& w,
                                   const physics::NonDimScheme& scheme, std::span<const double> closure) {
  check(e, grid);
  if (!closure.empty() && closure.size() != grid.inside.size()) throw DomainError("closure field does not match the grid");
  EnergyFunctional f;
  for (const Jet2& j : e.interior) {
    f.twist += j.gx * j.gx + j.gy * j.gy;
    f.div += j.laplacian() * j.laplacian();
  }
  for (double c : closure) f.clo += c * c;
  for (std::size_t k = 0; k < e.ring.size(); ++k) {
    const Point n = grid.ring[k];
    const Jet2& j = e.ring[k];
    const double r = n.x * j.gx + n.y * j.gy + scheme.Bi * j.v;
    f.port += r * r;
  }
  f.twist *= w.w1 * w.w1 * grid.cell_area;
  f.div *= w.w2 * w.w2 * w.h_omega * w.h_omega * grid.cell_area;
  f.clo *= w.w3 * w.w3 * grid.cell_area;
  f.port *= w.w4 * w.w4 * w.h_gamma * grid.ring_ds;
  f.total = f.twist + f.div + f.clo + f.port;
  return f;
}

}  // namespace peb::diagnostics
