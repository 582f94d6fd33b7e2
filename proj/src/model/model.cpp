#include "peb/model/model.hpp"

#include <string>

#include "peb/errors.hpp"

namespace peb::model {

namespace {

using autodiff::Activation;

Var param_block(Tape& tape, const ModelParams& params, int layer, std::string_view name) {
  const LayoutEntry& e = params.layout.find(layer, name);
  return tape.param(e.offset, e.rows, e.cols);
}

// W x + U h0 with the fused form when h0 aliases x.
Var input_projection(Tape& tape, Var w, Var u, Var x_in, std::optional<Var> h0) {
  if (!h0) return tape.matmul(w, x_in);
  if (h0->id == x_in.id) return tape.matmul(tape.add(w, u), x_in);
  return tape.add(tape.matmul(w, x_in), tape.matmul(u, *h0));
}

// alpha = exp(-softplus(raw)), a constant column.
Var leak_factor(Tape& tape, const ModelParams& params, int layer) {
  const Var raw = param_block(tape, params, layer, "lambda_raw");
  const Var lambda = tape.activate(raw, Activation::Softplus);
  return tape.activate(tape.affine(lambda, -1.0, 0.0), Activation::Exp);
}

// alpha * h0 + (1 - alpha) * target
Var leak_blend(Tape& tape, Var alpha, std::optional<Var> h0, Var target) {
  if (!h0) return tape.mul(target, tape.affine(alpha, -1.0, 1.0));
  return tape.add(target, tape.mul(tape.sub(*h0, target), alpha));
}

}  // namespace

Var dense_step(Tape& tape, const ModelParams& params, int layer, Var x_in) {
  const Var w = param_block(tape, params, layer, "W");
  const Var b = param_block(tape, params, layer, "b");
  return tape.activate(tape.add_bias(tape.matmul(w, x_in), b), params.arch.activation);
}

Var liquid_step(Tape& tape, const ModelParams& params, int layer, Var x_in, std::optional<Var> h0) {
  const Var w_in = param_block(tape, params, layer, "W_in");
  const Var w_rec = param_block(tape, params, layer, "W_recur");
  const Var b = param_block(tape, params, layer, "b");
  const Var pre = tape.add_bias(input_projection(tape, w_in, w_rec, x_in, h0), b);
  const Var response = tape.activate(pre, params.arch.activation);
  return leak_blend(tape, leak_factor(tape, params, layer), h0, response);
}

GatedState gated_step(Tape& tape, const ModelParams& params, int layer, Var x_in, std::optional<Var> h0) {
  // One product per gate: slicing a stacked 4d-row product costs more in
  // copies than the larger GEMM saves.
  auto gate = [&](const char* suffix, Activation f) {
    const std::string s(suffix);
    const Var w = param_block(tape, params, layer, "W_" + s);
    const Var u = param_block(tape, params, layer, "U_" + s);
    const Var b = param_block(tape, params, layer, "b_" + s);
    return tape.activate(tape.add_bias(input_projection(tape, w, u, x_in, h0), b), f);
  };
  const Var in_gate = gate("i", Activation::Sigmoid);
  const Var forget_gate = gate("f", Activation::Sigmoid);
  const Var out_gate = gate("o", Activation::Sigmoid);
  const Var candidate = gate("c", Activation::Tanh);
  const Var c0 = param_block(tape, params, layer, "c0");

  const Var c = tape.add(tape.mul(forget_gate, c0), tape.mul(in_gate, candidate));
  const Var h = tape.mul(out_gate, tape.activate(c, Activation::Tanh));
  return {h, c};
}

Var apply_layer(Tape& tape, const ModelParams& params, int layer, Var h) {
  const std::optional<Var> h0 = layer == 0 ? std::nullopt : std::optional<Var>(h);
  switch (layer_kind(params.arch.backbone)) {
    case LayerKind::Dense: return dense_step(tape, params, layer, h);
    case LayerKind::Liquid: return liquid_step(tape, params, layer, h, h0);
    case LayerKind::Gated: return gated_step(tape, params, layer, h, h0).h;
    case LayerKind::GatedLiquid: {
      const Var gated = gated_step(tape, params, layer, h, h0).h;
      return leak_blend(tape, leak_factor(tape, params, layer), h0, gated);
    }
  }
  return h;
}

Var apply_readout(Tape& tape, const ModelParams& params, Var h) {
  const Var w_out = param_block(tape, params, params.arch.depth, "W_out");
  const Var b_out = param_block(tape, params, params.arch.depth, "b_out");
  return tape.add_bias(tape.matmul(w_out, h), b_out);
}

Var build_forward(Tape& tape, const ModelParams& params, Var coords) {
  if (tape.rows(coords) != 2) throw DomainError("forward expects two coordinate rows");
  Var h = coords;
  for (int l = 0; l < params.arch.depth; ++l) h = apply_layer(tape, params, l, h);
  return apply_readout(tape, params, h);
}

Eigen::MatrixXd coordinate_jets(JetBasis basis, std::span<const Point> points) {
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  const int k = autodiff::component_count(basis);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, k * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    m(0, j) = points[static_cast<std::size_t>(j)].x;
    m(1, j) = points[static_cast<std::size_t>(j)].y;
    if (k > 1) {
      m(0, autodiff::kDx * n + j) = 1.0;
      m(1, autodiff::kDy * n + j) = 1.0;
    }
  }
  return m;
}

Jet2 jet_at(const Tape& tape, Var v, Eigen::Index row, Eigen::Index col) {
  const Eigen::MatrixXd& m = tape.value(v);
  const Eigen::Index n = tape.cols(v);
  double c[6] = {0, 0, 0, 0, 0, 0};
  const int k = tape.components(v);
  if (tape.kind(v) == autodiff::NodeKind::Jet && tape.basis() == JetBasis::Laplacian) {
    throw DomainError("a Laplacian jet does not determine the Hessian");
  }
  for (int i = 0; i < k; ++i) c[i] = m(row, i * n + col);
  return Jet2{c[0], c[1], c[2], c[3], c[4], c[5]};
}

std::vector<Jet2> forward(const ModelParams& params, const Jet2& x, const Jet2& y) {
  Tape tape(JetBasis::Hessian, params.flat);
  Eigen::MatrixXd in(2, 6);
  in << x.v, x.gx, x.gy, x.hxx, x.hxy, x.hyy, y.v, y.gx, y.gy, y.hxx, y.hxy, y.hyy;
  const Var out = build_forward(tape, params, tape.input(std::move(in), 1));
  std::vector<Jet2> result;
  for (Eigen::Index h = 0; h < tape.rows(out); ++h) result.push_back(jet_at(tape, out, h, 0));
  return result;
}

std::vector<std::vector<Jet2>> evaluate_jets(const ModelParams& params, std::span<const Point> points,
                                             std::size_t chunk) {
  const int heads = head_count(params.arch.head);
  std::vector<std::vector<Jet2>> out(static_cast<std::size_t>(heads));
  for (auto& h : out) h.reserve(points.size());
  for (std::size_t start = 0; start < points.size(); start += chunk) {
    const auto part = points.subspan(start, std::min(chunk, points.size() - start));
    Tape tape(JetBasis::Hessian, params.flat);
    const Var o = build_forward(tape, params,
                                tape.input(coordinate_jets(JetBasis::Hessian, part),
                                           static_cast<Eigen::Index>(part.size())));
    for (int h = 0; h < heads; ++h) {
      for (std::size_t j = 0; j < part.size(); ++j) {
        out[static_cast<std::size_t>(h)].push_back(jet_at(tape, o, h, static_cast<Eigen::Index>(j)));
      }
    }
  }
  return out;
}

std::vector<double> evaluate_values(const ModelParams& params, std::span<const Point> points,
                                    std::size_t chunk) {
  std::vector<double> out;
  out.reserve(points.size());
  for (std::size_t start = 0; start < points.size(); start += chunk) {
    const auto part = points.subspan(start, std::min(chunk, points.size() - start));
    Tape tape(JetBasis::Value, params.flat);
    const Var o = build_forward(
        tape, params,
        tape.input(coordinate_jets(JetBasis::Value, part), static_cast<Eigen::Index>(part.size())));
    const Eigen::MatrixXd& v = tape.value(o);
    for (Eigen::Index j = 0; j < v.cols(); ++j) out.push_back(v(0, j));
  }
  return out;
}

}  // namespace peb::model
