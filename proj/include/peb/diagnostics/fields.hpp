#pragma once

#include <vector>

#include "peb/autodiff/jet2.hpp"
#include "peb/diagnostics/grid.hpp"
#include "peb/model/layout.hpp"
#include "peb/physics/problem.hpp"

namespace peb::diagnostics {

using autodiff::Jet2;

// Predictor output jets on a grid, indexed [head][point].
struct FieldSamples {
  model::HeadMode mode = model::HeadMode::Potential;
  std::vector<std::vector<Jet2>> interior;
  std::vector<std::vector<Jet2>> ring;
};

FieldSamples sample_model(const model::ModelParams& params, const EvalGrid& grid);
// The exact solution presented as a potential-mode predictor.
FieldSamples sample_analytic(const EvalGrid& grid, const physics::NonDimScheme& scheme);

// e = u_pred - u_exact on the grid nodes and ring.
struct ErrorJets {
  std::vector<Jet2> interior;
  std::vector<Jet2> ring;
};
ErrorJets error_jets(const FieldSamples& samples, const EvalGrid& grid, const physics::NonDimScheme& scheme);

// Pointwise residual channels of the predictor (closure is zero in
// potential mode).
struct ResidualFields {
  std::vector<double> twist_sq;  // interior nodes
  std::vector<double> div;       // interior nodes
  std::vector<double> clo;       // interior nodes
  std::vector<double> port;      // ring points
};
ResidualFields residual_fields(const FieldSamples& samples, const EvalGrid& grid,
                               const physics::NonDimScheme& scheme);

}  // namespace peb::diagnostics
