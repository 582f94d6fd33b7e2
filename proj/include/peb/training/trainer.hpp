#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "peb/model/layout.hpp"
#include "peb/physics/collocation.hpp"
#include "peb/physics/problem.hpp"
#include "peb/training/adam.hpp"
#include "peb/training/checkpoint.hpp"

namespace peb::training {

// Loss value, channel split and (optionally) parameter gradient of the
// training objective over one collocation set.
struct Objective {
  double total = 0.0;
  double pde = 0.0;
  double bc = 0.0;
  double twist = 0.0;
  double div = 0.0;
  double clo = 0.0;
  double port = 0.0;
  std::vector<double> grad;
};

struct EvalOptions {
  std::size_t chunk = 256;  // points per tape
  unsigned threads = 0;     // 0: evaluate chunks sequentially on the caller
  bool gradient = true;
};

// Chunks are evaluated independently (possibly on worker threads) and their
// contributions are combined by a fixed pairwise tree, so the result does not
// depend on the thread count.
Objective evaluate_objective(const model::ModelParams& params, const physics::CollocationSet& points,
                             const physics::NonDimScheme& scheme, const physics::LossWeights& weights,
                             const EvalOptions& options = {});

struct TrainConfig {
  model::Architecture arch;
  double lr = 8e-4;
  std::uint64_t iterations = 50000;
  std::uint64_t init_seed = 0;
  std::uint64_t sample_seed = 1;
  std::size_t n_interior = 4096;
  std::size_t n_boundary = 512;
  physics::ResamplePolicy resample = physics::ResamplePolicy::Fixed;
  physics::PhysicalConstants constants;
  physics::LossWeights weights;
  std::uint64_t checkpoint_every = 0;  // 0: no intermediate checkpoints
  std::uint64_t history_every = 1;
  std::optional<double> clip_norm;     // max-norm gradient clipping, off by default
  EvalOptions eval;

  void validate() const;
};

struct HistoryRecord {
  std::uint64_t iteration = 0;
  double loss_total = 0.0;
  double loss_pde = 0.0;
  double loss_bc = 0.0;
  double seconds = 0.0;  // wall clock since the start of this run
};

struct LossHistory {
  std::vector<HistoryRecord> records;
};

struct TrainHooks {
  // Called after every checkpoint_every-th update.
  std::function<void(const Checkpoint&)> on_checkpoint;
  std::function<void(const HistoryRecord&)> on_record;
};

struct TrainResult {
  model::ModelParams params;
  AdamState adam;
  LossHistory history;
  double seconds = 0.0;
};

// Runs iterations [start, config.iterations) where start is 0 or the
// iteration stored in `resume_from`. Iteration t evaluates the objective at
// the current parameters, records it when t % history_every == 0, then
// applies one Adam update. Non-finite losses or gradients throw
// NumericalError whose where() is the iteration.
TrainResult train(const TrainConfig& config, const TrainHooks& hooks = {},
                  std::optional<Checkpoint> resume_from = std::nullopt);

}  // namespace peb::training
