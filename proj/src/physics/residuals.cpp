#include "peb/physics/residuals.hpp"

#include <cmath>
#include <numbers>

#include "peb/errors.hpp"

namespace peb::physics {

void require_on_circle(Point p) {
  if (std::abs(p.x * p.x + p.y * p.y - 1.0) > 1e-12) {
    throw DomainError("boundary residual requested off the unit circle");
  }
}

ResidualBundle residual_potential(const Jet2& u, Point at, Where where, const NonDimScheme& scheme) {
  ResidualBundle r;
  r.div = -u.laplacian() - scheme.q_hat;
  if (where == Where::Boundary) {
    require_on_circle(at);
    r.port = -(at.x * u.gx + at.y * u.gy) - scheme.Bi * u.v;
  }
  return r;
}

ResidualBundle residual_mixed(const Jet2& u, const Jet2& wx, const Jet2& wy, Point at, Where where,
                              const NonDimScheme& scheme) {
  ResidualBundle r;
  r.twist_x = wx.v + u.gx;
  r.twist_y = wy.v + u.gy;
  r.clo = wy.gx - wx.gy;
  r.div = wx.gx + wy.gy - scheme.q_hat;
  if (where == Where::Boundary) {
    require_on_circle(at);
    r.port = at.x * wx.v + at.y * wy.v - scheme.Bi * u.v;
  }
  return r;
}

double loss_pde(std::span<const ResidualBundle> interior, const LossWeights& weights) {
  if (interior.empty()) throw DomainError("loss_pde needs at least one interior residual");
  const double a = std::numbers::pi / static_cast<double>(interior.size());
  double twist = 0.0;
  double div = 0.0;
  double clo = 0.0;
  for (const ResidualBundle& r : interior) {
    if (r.port) throw DomainError("loss_pde given a boundary residual");
    twist += r.twist_sq();
    div += r.div * r.div;
    clo += r.clo * r.clo;
  }
  return a * (weights.w1 * twist + weights.w2 * weights.h_omega * weights.h_omega * div + weights.w3 * clo);
}

double loss_bc(std::span<const ResidualBundle> boundary, const LossWeights& weights) {
  if (boundary.empty()) throw DomainError("loss_bc needs at least one boundary residual");
  const double ds = 2.0 * std::numbers::pi / static_cast<double>(boundary.size());
  double sum = 0.0;
  for (const ResidualBundle& r : boundary) {
    if (!r.port) throw DomainError("loss_bc given an interior residual");
    sum += *r.port * *r.port;
  }
  return weights.w4 * weights.h_gamma * ds * sum;
}

}  // namespace peb::physics
