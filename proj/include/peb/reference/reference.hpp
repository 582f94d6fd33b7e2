#pragma once

#include <vector>

#include "peb/autodiff/jet2.hpp"
#include "peb/geometry.hpp"
#include "peb/physics/problem.hpp"

namespace peb::reference {

using autodiff::Jet2;
using physics::NonDimScheme;

// Exact radial solution of the disk problem in the shifted variable,
//   u*(r) = (c1 + c2 (1 - r^2)) / (c1 + c2),  c1 = QR/(2h),  c2 = QR^2/(4k).
// Radii up to 1 + 1e-12 are accepted so that rounded boundary points pass.
double analytic_u(double r, const NonDimScheme& scheme);
// Same field in Kelvin.
double analytic_T(double r, const NonDimScheme& scheme);
// Closed-form value, gradient and Hessian at a point of the closed disk.
Jet2 analytic_jet(Point p, const NonDimScheme& scheme);

struct RadialGridSolution {
  int n = 0;
  std::vector<double> r_nodes;
  std::vector<double> u_nodes;

  // Largest nodal deviation from analytic_u.
  double max_error(const NonDimScheme& scheme) const;
};

// Vertex-centred finite-volume solve of -(1/r)(r u')' = q_hat on [0, 1] with
// u'(0) = 0 and -u'(1) = Bi u(1): central-difference face fluxes, nodal
// (lumped) source quadrature, direct tridiagonal elimination. The lumped
// source makes the scheme second order without being exact on the quadratic
// solution, so it is a genuine convergence oracle.
RadialGridSolution radial_fd_solve(int n, const NonDimScheme& scheme);

}  // namespace peb::reference
