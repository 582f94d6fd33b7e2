#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "peb/autodiff/jet2.hpp"
#include "peb/autodiff/tape.hpp"
#include "peb/geometry.hpp"
#include "peb/model/layout.hpp"

namespace peb::model {

using autodiff::Jet2;
using autodiff::JetBasis;
using autodiff::Tape;
using autodiff::Var;

// Layer steps on a tape. `x_in` and `h0` are jet tensors (width x points);
// an absent h0 means the zero state. When h0 is the very same node as x_in
// (every layer after the first) the two input matrices are summed before the
// product, which is algebraically identical to the concatenated form.
Var liquid_step(Tape& tape, const ModelParams& params, int layer, Var x_in, std::optional<Var> h0);

struct GatedState {
  Var h;
  Var c;
};
GatedState gated_step(Tape& tape, const ModelParams& params, int layer, Var x_in, std::optional<Var> h0);

Var dense_step(Tape& tape, const ModelParams& params, int layer, Var x_in);

// Hidden layer `layer` as a map of its input alone: the first layer starts
// from the zero state, deeper layers use their input as h0 as well.
Var apply_layer(Tape& tape, const ModelParams& params, int layer, Var h);
Var apply_readout(Tape& tape, const ModelParams& params, Var h);

// Whole predictor: coordinate jets (2 x n) to output jets (heads x n).
Var build_forward(Tape& tape, const ModelParams& params, Var coords);

// 2 x (k*n) jet matrix seeding x on the first row and y on the second.
Eigen::MatrixXd coordinate_jets(JetBasis basis, std::span<const Point> points);

// Single point, full Hessian jets; x and y are normally jet_seed(.., X/Y).
std::vector<Jet2> forward(const ModelParams& params, const Jet2& x, const Jet2& y);

// Batched evaluation in chunks. Result is indexed [head][point].
std::vector<std::vector<Jet2>> evaluate_jets(const ModelParams& params, std::span<const Point> points,
                                             std::size_t chunk = 1024);
// Head-0 values only.
std::vector<double> evaluate_values(const ModelParams& params, std::span<const Point> points,
                                    std::size_t chunk = 4096);

// Rebuilds a Jet2 from column j of a tape jet tensor (missing components 0).
Jet2 jet_at(const Tape& tape, Var v, Eigen::Index row, Eigen::Index col);

}  // namespace peb::model
