#include "peb/diagnostics/fields.hpp"

#include "peb/errors.hpp"
#include "peb/model/model.hpp"
#include "peb/physics/residuals.hpp"
#include "peb/reference/reference.hpp"

namespace peb::diagnostics {

FieldSamples sample_model(const model::ModelParams& params, const EvalGrid& grid) {
  return FieldSamples{params.arch.head, model::evaluate_jets(params, grid.inside),
                      model::evaluate_jets(params, grid.ring)};
}

FieldSamples sample_analytic(const EvalGrid& grid, const physics::NonDimScheme& scheme) {
  FieldSamples s;
  s.interior.resize(1);
  s.ring.resize(1);
  for (const Point& p : grid.inside) s.interior[0].push_back(reference::analytic_jet(p, scheme));
  for (const Point& p : grid.ring) s.ring[0].push_back(reference::analytic_jet(p, scheme));
  return s;
}

ErrorJets error_jets(const FieldSamples& samples, const EvalGrid& grid, const physics::NonDimScheme& scheme) {
  if (samples.interior.empty() || samples.interior[0].size() != grid.inside.size() ||
      samples.ring.empty() || samples.ring[0].size() != grid.ring.size()) {
    throw DomainError("field samples do not match the grid");
  }
  ErrorJets e;
  e.interior.reserve(grid.inside.size());
  e.ring.reserve(grid.ring.size());
  for (std::size_t k = 0; k < grid.inside.size(); ++k) {
    e.interior.push_back(samples.interior[0][k] - reference::analytic_jet(grid.inside[k], scheme));
  }
  for (std::size_t k = 0; k < grid.ring.size(); ++k) {
    e.ring.push_back(samples.ring[0][k] - reference::analytic_jet(grid.ring[k], scheme));
  }
  return e;
}

ResidualFields residual_fields(const FieldSamples& s, const EvalGrid& grid, const physics::NonDimScheme& scheme) {
  using physics::Where;
  const bool mixed = s.mode == model::HeadMode::Mixed;
  if (s.interior.size() != (mixed ? 3u : 1u) || s.ring.size() != s.interior.size()) {
    throw DomainError("field samples do not match their head mode");
  }
  auto bundle = [&](const std::vector<std::vector<Jet2>>& heads, std::size_t k, Point p, Where w) {
    return mixed ? physics::residual_mixed(heads[0][k], heads[1][k], heads[2][k], p, w, scheme)
                 : physics::residual_potential(heads[0][k], p, w, scheme);
  };
  ResidualFields r;
  const std::size_t n = grid.inside.size();
  r.twist_sq.resize(n);
  r.div.resize(n);
  r.clo.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const physics::ResidualBundle b = bundle(s.interior, k, grid.inside[k], Where::Interior);
    r.twist_sq[k] = b.twist_sq();
    r.div[k] = b.div;
    r.clo[k] = b.clo;
  }
  r.port.resize(grid.ring.size());
  for (std::size_t k = 0; k < grid.ring.size(); ++k) {
    r.port[k] = *bundle(s.ring, k, grid.ring[k], Where::Boundary).port;
  }
  return r;
}

}  // namespace peb::diagnostics
