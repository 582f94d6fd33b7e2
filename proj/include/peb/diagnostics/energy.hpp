#pragma once

#include <span>

#include "peb/diagnostics/fields.hpp"
#include "peb/diagnostics/grid.hpp"
#include "peb/physics/problem.hpp"

namespace peb::diagnostics {

// ||e||_E^2 = int_Omega |grad e|^2 + Bi int_dOmega e^2 (k' = 1), by grid and
// ring quadrature.
double energy_norm_sq(const ErrorJets& e, const EvalGrid& grid, const physics::NonDimScheme& scheme);

struct EnergyFunctional {
  double twist = 0.0;
  double div = 0.0;
  double clo = 0.0;
  double port = 0.0;
  double total = 0.0;
};

// Weighted residual energy of an error field with squared channel weights:
//   w1^2 int |grad e|^2 + w2^2 h_Omega^2 int (lap e)^2 + w3^2 int clo^2
//     + w4^2 h_Gamma int_dOmega (n . grad e + Bi e)^2.
// `closure` holds the closure residual on the interior nodes (mixed mode);
// empty means zero.
EnergyFunctional energy_functional(const ErrorJets& e, const EvalGrid& grid, const physics::LossWeights& weights,
                                   const physics::NonDimScheme& scheme, std::span<const double> closure = {});

}  // namespace peb::diagnostics
