#include "peb/training/adam.hpp"

#include <cmath>

#include "peb/errors.hpp"

namespace peb::training {

AdamState AdamState::zeros(std::size_t n, double lr) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(AdamState& s, std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size() || s.m.size() != grad.size() || s.v.size() != grad.size()) {
    throw DomainError("adam_step: size mismatch");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw NumericalError("non-finite gradient component", static_cast<std::ptrdiff_t>(i));
    }
  }
  ++s.t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double g = grad[i];
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
    const double m_hat = s.m[i] / c1;
    const double v_hat = s.v[i] / c2;
    params[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

}  // namespace peb::training
