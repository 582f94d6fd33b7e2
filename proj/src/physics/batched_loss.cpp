#include "peb/physics/batched_loss.hpp"

#include "peb/errors.hpp"
#include "peb/physics/residuals.hpp"

namespace peb::physics {

namespace {

using autodiff::component_count;
using autodiff::kDx;
using autodiff::kDy;
using autodiff::kValue;
using Eigen::MatrixXd;

MatrixXd unit_coeffs(JetBasis basis, int component, double scale = 1.0) {
  MatrixXd c = MatrixXd::Zero(component_count(basis), 1);
  c(component, 0) = scale;
  return c;
}

Eigen::VectorXd uniform(Eigen::Index n, double w) { return Eigen::VectorXd::Constant(n, w); }

}  // namespace

JetBasis interior_basis(model::HeadMode mode) {
  return mode == model::HeadMode::Potential ? JetBasis::Laplacian : JetBasis::Gradient;
}

JetBasis boundary_basis(model::HeadMode) { return JetBasis::Gradient; }

ChannelLosses interior_loss(Tape& tape, Var outputs, std::span<const Point> points, model::HeadMode mode,
                            const NonDimScheme& scheme, const LossWeights& weights, double point_weight) {
  const JetBasis basis = tape.basis();
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  if (tape.cols(outputs) != n) throw DomainError("interior outputs do not match the point count");
  ChannelLosses out;
  const double div_weight = weights.w2 * weights.h_omega * weights.h_omega * point_weight;
  if (mode == model::HeadMode::Potential) {
    const MatrixXd lap = -autodiff::laplacian_coefficients(basis);
    const Var r_div = tape.affine(tape.extract(outputs, 0, lap), 1.0, -scheme.q_hat);
    out.div = tape.weighted_sum_squares(r_div, uniform(n, div_weight));
    out.total = *out.div;
    return out;
  }
  if (tape.rows(outputs) != 3) throw ModeError("mixed-mode loss needs three output heads");
  auto comp = [&](int head, int k) { return tape.extract(outputs, head, unit_coeffs(basis, k)); };
  const Var r_tx = tape.add(comp(1, kValue), comp(0, kDx));
  const Var r_ty = tape.add(comp(2, kValue), comp(0, kDy));
  const Var r_clo = tape.sub(comp(2, kDx), comp(1, kDy));
  const Var r_div = tape.affine(tape.add(comp(1, kDx), comp(2, kDy)), 1.0, -scheme.q_hat);
  const Eigen::VectorXd tw = uniform(n, weights.w1 * point_weight);
  out.twist = tape.add(tape.weighted_sum_squares(r_tx, tw), tape.weighted_sum_squares(r_ty, tw));
  out.div = tape.weighted_sum_squares(r_div, uniform(n, div_weight));
  out.clo = tape.weighted_sum_squares(r_clo, uniform(n, weights.w3 * point_weight));
  out.total = tape.add(tape.add(*out.twist, *out.div), *out.clo);
  return out;
}

ChannelLosses boundary_loss(Tape& tape, Var outputs, std::span<const Point> points, model::HeadMode mode,
                            const NonDimScheme& scheme, const LossWeights& weights, double point_weight) {
  const JetBasis basis = tape.basis();
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  if (tape.cols(outputs) != n) throw DomainError("boundary outputs do not match the point count");
  for (const Point& p : points) require_on_circle(p);
  const int k = component_count(basis);
  ChannelLosses out;
  Var r_port;
  if (mode == model::HeadMode::Potential) {
    // -(x u_x + y u_y) - Bi u
    MatrixXd c = MatrixXd::Zero(k, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      c(kValue, j) = -scheme.Bi;
      c(kDx, j) = -points[static_cast<std::size_t>(j)].x;
      c(kDy, j) = -points[static_cast<std::size_t>(j)].y;
    }
    r_port = tape.extract(outputs, 0, std::move(c));
  } else {
    if (tape.rows(outputs) != 3) throw ModeError("mixed-mode loss needs three output heads");
    MatrixXd cx = MatrixXd::Zero(k, n);
    MatrixXd cy = MatrixXd::Zero(k, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      cx(kValue, j) = points[static_cast<std::size_t>(j)].x;
      cy(kValue, j) = points[static_cast<std::size_t>(j)].y;
    }
    const Var flux = tape.add(tape.extract(outputs, 1, std::move(cx)), tape.extract(outputs, 2, std::move(cy)));
    r_port = tape.add(flux, tape.extract(outputs, 0, unit_coeffs(basis, kValue, -scheme.Bi)));
  }
  out.port = tape.weighted_sum_squares(r_port, uniform(n, weights.w4 * weights.h_gamma * point_weight));
  out.total = *out.port;
  return out;
}

}  // namespace peb::physics
