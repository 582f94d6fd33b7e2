#include "peb/physics/problem.hpp"

#include <cmath>

#include "peb/errors.hpp"

namespace peb::physics {

void PhysicalConstants::validate() const {
  for (double v : {k, Q, h, T_inf, R}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("physical constants must be positive and finite");
  }
}

NonDimScheme make_scheme(const PhysicalConstants& c) {
  c.validate();
  NonDimScheme s;
  s.L = c.R;
  s.edge_rise = c.Q * c.R / (2.0 * c.h);
  s.core_rise = c.Q * c.R * c.R / (4.0 * c.k);
  s.dT = s.edge_rise + s.core_rise;
  s.Bi = c.h * c.R / c.k;
  s.q_hat = 1.0 / (c.k / (2.0 * c.h * c.R) + 0.25);
  s.unshifted_scale = c.Q * c.R * c.R / c.k;
  s.T_inf = c.T_inf;
  return s;
}

void LossWeights::validate() const {
  for (double v : {w1, w2, w3, w4, eps_clo, h_omega, h_gamma}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("loss weights must be nonnegative and finite");
  }
}

}  // namespace peb::physics
