#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace peb::training {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-3;

  static AdamState zeros(std::size_t n, double lr);
};

// One bias-corrected Adam update of `params` in place. A non-finite gradient
// entry throws NumericalError carrying its index; nothing is modified then.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad);

}  // namespace peb::training
