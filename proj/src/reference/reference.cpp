#include "peb/reference/reference.hpp"

#include <cmath>
#include <string>

#include "peb/errors.hpp"

namespace peb::reference {

namespace {

constexpr double kRadiusSlack = 1e-12;

void check_radius(double r) {
  if (!(r >= 0.0) || r > 1.0 + kRadiusSlack) {
    throw DomainError("radius " + std::to_string(r) + " outside [0, 1]");
  }
}

}  // namespace

double analytic_u(double r, const NonDimScheme& s) {
  check_radius(r);
  return (s.edge_rise + s.core_rise * (1.0 - r * r)) / s.dT;
}

double analytic_T(double r, const NonDimScheme& s) {
  check_radius(r);
  return s.T_inf + s.edge_rise + s.core_rise * (1.0 - r * r);
}

Jet2 analytic_jet(Point p, const NonDimScheme& s) {
  const double r2 = p.x * p.x + p.y * p.y;
  check_radius(std::sqrt(r2));
  const double a = s.edge_rise / s.dT;
  const double b = s.core_rise / s.dT;
  return Jet2{a + b * (1.0 - r2), -2.0 * b * p.x, -2.0 * b * p.y, -2.0 * b, 0.0, -2.0 * b};
}

double RadialGridSolution::max_error(const NonDimScheme& scheme) const {
  double err = 0.0;
  for (std::size_t i = 0; i < r_nodes.size(); ++i) {
    err = std::max(err, std::abs(u_nodes[i] - analytic_u(r_nodes[i], scheme)));
  }
  return err;
}

RadialGridSolution radial_fd_solve(int n, const NonDimScheme& scheme) {
  if (n < 16) throw DomainError("radial_fd_solve needs at least 16 nodes");
  const int last = n - 1;
  const double h = 1.0 / last;
  RadialGridSolution sol;
  sol.n = n;
  sol.r_nodes.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) sol.r_nodes[static_cast<std::size_t>(i)] = i == last ? 1.0 : i * h;

  // Row i: lower[i] u_{i-1} + diag[i] u_i + upper[i] u_{i+1} = rhs[i], built
  // from the flux balance F(r_{i+1/2}) - F(r_{i-1/2}) = q_hat * V_i with
  // F = -r u' and V_i = r_i * (cell width).
  std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double r = sol.r_nodes[static_cast<std::size_t>(i)];
    if (i > 0) {
      const double face = r - 0.5 * h;
      lower[i] -= face / h;
      diag[i] += face / h;
    }
    if (i < last) {
      const double face = r + 0.5 * h;
      upper[i] -= face / h;
      diag[i] += face / h;
    } else {
      diag[i] += scheme.Bi;  // F(1) = Bi u(1)
    }
    const double width = (i == 0 || i == last) ? 0.5 * h : h;
    rhs[i] = scheme.q_hat * r * width;
  }

  // Thomas elimination.
  for (int i = 1; i < n; ++i) {
    if (diag[i - 1] == 0.0) throw NumericalError("singular radial system", i - 1);
    const double m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  if (diag[last] == 0.0) throw NumericalError("singular radial system", last);
  sol.u_nodes.assign(static_cast<std::size_t>(n), 0.0);
  sol.u_nodes[last] = rhs[last] / diag[last];
  for (int i = last - 1; i >= 0; --i) {
    sol.u_nodes[i] = (rhs[i] - upper[i] * sol.u_nodes[i + 1]) / diag[i];
  }
  return sol;
}

}  // namespace peb::reference
