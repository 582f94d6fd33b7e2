#pragma once

#include <optional>
#include <span>

#include "peb/autodiff/tape.hpp"
#include "peb/geometry.hpp"
#include "peb/model/layout.hpp"
#include "peb/physics/problem.hpp"

namespace peb::physics {

using autodiff::JetBasis;
using autodiff::Tape;
using autodiff::Var;

// Smallest jet basis that carries what the residuals read: the Laplacian for
// potential-mode interior points, first derivatives everywhere else.
JetBasis interior_basis(model::HeadMode mode);
JetBasis boundary_basis(model::HeadMode mode);

// Per-channel weighted partial sums recorded on a tape. Absent channels are
// identically zero in the chosen mode.
struct ChannelLosses {
  std::optional<Var> twist;
  std::optional<Var> div;
  std::optional<Var> clo;
  std::optional<Var> port;
  Var total;
};

// `outputs` is the heads x n jet tensor produced by model::build_forward for
// `points`; `point_weight` is the quadrature weight of each point.
ChannelLosses interior_loss(Tape& tape, Var outputs, std::span<const Point> points, model::HeadMode mode,
                            const NonDimScheme& scheme, const LossWeights& weights, double point_weight);
ChannelLosses boundary_loss(Tape& tape, Var outputs, std::span<const Point> points, model::HeadMode mode,
                            const NonDimScheme& scheme, const LossWeights& weights, double point_weight);

}  // namespace peb::physics
