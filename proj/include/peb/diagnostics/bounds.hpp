#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "peb/geometry.hpp"
#include "peb/model/layout.hpp"

namespace peb::diagnostics {

struct BoundOptions {
  int power_iterations = 20;
  double tolerance = 1e-8;
  int random_directions = 16;  // per sample and layer, besides the directions the network feeds
  double beta_g = 1.0;
  std::uint64_t seed = 0;
};

// The predictor is viewed as a chain of maps F_1..F_m: the hidden layers
// followed by the affine readout. L_j and H_j are the largest sampled
// first- and second-derivative norms of F_j over the layer inputs the
// network actually produces at the sample points.
struct OperatorBoundReport {
  std::vector<double> L;
  std::vector<double> H;
  // sum_l H_l prod_{j>l} L_j^2 prod_{j<l} L_j  (ordering as usually printed)
  double sum_product = 0.0;
  // sum_l H_l prod_{j>l} L_j prod_{j<l} L_j^2  (ordering of the chain rule)
  double sum_product_chain = 0.0;
  // beta_g ||W||^2 ||W_out||^2 with W the first layer's input matrix (the
  // stacked gate matrix for gated layers).
  double gated_bound = 0.0;
  double W_norm = 0.0;
  double W_out_norm = 0.0;
  double beta_g = 1.0;
  double sampled_hessian_max = 0.0;  // max over samples of the 2x2 spectral norm of D^2 u
  int power_unconverged = 0;         // Jacobians whose power iteration hit the step cap
  std::size_t samples = 0;

  bool dominance() const { return sampled_hessian_max <= sum_product; }
  bool dominance_chain() const { return sampled_hessian_max <= sum_product_chain; }
};

// Needs at least 64 sample points.
OperatorBoundReport second_order_bound(const model::ModelParams& params, std::span<const Point> samples,
                                       const BoundOptions& options = {});

}  // namespace peb::diagnostics
