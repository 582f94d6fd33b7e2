#pragma once

#include <optional>
#include <span>

#include "peb/autodiff/jet2.hpp"
#include "peb/geometry.hpp"
#include "peb/physics/problem.hpp"

namespace peb::physics {

using autodiff::Jet2;

enum class Where { Interior, Boundary };

// Residual channels at one point, dimensionless. r_port is present only on
// boundary points.
struct ResidualBundle {
  double twist_x = 0.0;
  double twist_y = 0.0;
  double div = 0.0;
  double clo = 0.0;
  std::optional<double> port;

  double twist_sq() const { return twist_x * twist_x + twist_y * twist_y; }
};

// Potential mode: the flux proxy is omega = -grad u by construction, so the
// twist and closure channels vanish identically.
//   div  = -lap u - q_hat
//   port = -du/dn - Bi u        (n = (x, y) on the unit circle)
ResidualBundle residual_potential(const Jet2& u, Point at, Where where, const NonDimScheme& scheme);

// Mixed mode with independent heads u and omega = (wx, wy):
//   twist = omega + grad u
//   clo   = d(wy)/dx - d(wx)/dy
//   div   = div omega - q_hat
//   port  = omega . n - Bi u
// With omega = -grad u every channel reduces to the potential-mode value.
ResidualBundle residual_mixed(const Jet2& u, const Jet2& wx, const Jet2& wy, Point at, Where where,
                              const NonDimScheme& scheme);

// Monte-Carlo quadrature over the unit disk (weight pi/N per point):
//   w1 sum |twist|^2 + w2 h_Omega^2 sum div^2 + w3 sum clo^2.
double loss_pde(std::span<const ResidualBundle> interior, const LossWeights& weights);
// w4 h_Gamma sum port^2 with weight 2 pi / N per point.
double loss_bc(std::span<const ResidualBundle> boundary, const LossWeights& weights);
inline double loss_total(double pde, double bc) { return pde + bc; }

// Throws DomainError unless |x^2 + y^2 - 1| <= 1e-12.
void require_on_circle(Point p);

}  // namespace peb::physics
