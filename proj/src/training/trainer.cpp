#include "peb/training/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "peb/errors.hpp"
#include "peb/model/model.hpp"
#include "peb/physics/batched_loss.hpp"

namespace peb::training {

namespace {

using autodiff::Tape;
using autodiff::Var;

struct Task {
  bool interior = true;
  std::size_t begin = 0;
  std::size_t count = 0;
};

struct Partial {
  double twist = 0.0, div = 0.0, clo = 0.0, port = 0.0;
  std::vector<double> grad;
};

Partial run_task(const Task& task, const model::ModelParams& params, const physics::CollocationSet& set,
                 const physics::NonDimScheme& scheme, const physics::LossWeights& weights, bool gradient) {
  const model::HeadMode mode = params.arch.head;
  const autodiff::JetBasis basis =
      task.interior ? physics::interior_basis(mode) : physics::boundary_basis(mode);
  const std::span<const Point> all = task.interior ? std::span<const Point>(set.interior)
                                                   : std::span<const Point>(set.boundary);
  const auto pts = all.subspan(task.begin, task.count);
  Tape tape(basis, params.flat);
  const Var coords = tape.input(model::coordinate_jets(basis, pts), static_cast<Eigen::Index>(pts.size()));
  const Var out = model::build_forward(tape, params, coords);
  const physics::ChannelLosses loss =
      task.interior ? physics::interior_loss(tape, out, pts, mode, scheme, weights, set.interior_weight)
                    : physics::boundary_loss(tape, out, pts, mode, scheme, weights, set.boundary_weight);
  Partial p;
  if (loss.twist) p.twist = tape.scalar(*loss.twist);
  if (loss.div) p.div = tape.scalar(*loss.div);
  if (loss.clo) p.clo = tape.scalar(*loss.clo);
  if (loss.port) p.port = tape.scalar(*loss.port);
  if (gradient) p.grad = tape.backward(loss.total);
  return p;
}

void accumulate(Partial& into, const Partial& from) {
  into.twist += from.twist;
  into.div += from.div;
  into.clo += from.clo;
  into.port += from.port;
  if (!from.grad.empty()) {
    for (std::size_t i = 0; i < into.grad.size(); ++i) into.grad[i] += from.grad[i];
  }
}

// Pairwise reduction in a fixed order: (0+1)+(2+3), then ((0+1)+(2+3))+...,
// independent of how the partials were produced.
Partial tree_reduce(std::vector<Partial>& parts) {
  for (std::size_t stride = 1; stride < parts.size(); stride *= 2) {
    for (std::size_t i = 0; i + stride < parts.size(); i += 2 * stride) accumulate(parts[i], parts[i + stride]);
  }
  return std::move(parts.front());
}

template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, n); ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<Task> make_tasks(const physics::CollocationSet& set, std::size_t chunk) {
  std::vector<Task> tasks;
  for (std::size_t b = 0; b < set.interior.size(); b += chunk) {
    tasks.push_back(Task{true, b, std::min(chunk, set.interior.size() - b)});
  }
  for (std::size_t b = 0; b < set.boundary.size(); b += chunk) {
    tasks.push_back(Task{false, b, std::min(chunk, set.boundary.size() - b)});
  }
  return tasks;
}

}  // namespace

Objective evaluate_objective(const model::ModelParams& params, const physics::CollocationSet& set,
                             const physics::NonDimScheme& scheme, const physics::LossWeights& weights,
                             const EvalOptions& options) {
  if (set.interior.empty() || set.boundary.empty()) throw DomainError("collocation set has an empty part");
  if (options.chunk == 0) throw DomainError("chunk size must be positive");
  const std::vector<Task> tasks = make_tasks(set, options.chunk);
  std::vector<Partial> parts(tasks.size());
  parallel_for(tasks.size(), options.threads, [&](std::size_t i) {
    parts[i] = run_task(tasks[i], params, set, scheme, weights, options.gradient);
  });
  Partial sum = tree_reduce(parts);
  Objective o;
  o.twist = sum.twist;
  o.div = sum.div;
  o.clo = sum.clo;
  o.port = sum.port;
  o.pde = (sum.twist + sum.div) + sum.clo;
  o.bc = sum.port;
  o.total = o.pde + o.bc;
  o.grad = std::move(sum.grad);
  return o;
}

void TrainConfig::validate() const {
  arch.validate();
  constants.validate();
  weights.validate();
  if (!(lr > 0.0)) throw DomainError("learning rate must be positive");
  if (iterations < 1) throw DomainError("iterations must be at least 1");
  if (n_interior < 1 || n_boundary < 1) throw DomainError("collocation counts must be positive");
  if (history_every < 1) throw DomainError("history_every must be at least 1");
  if (clip_norm && !(*clip_norm > 0.0)) throw DomainError("clip norm must be positive");
}

TrainResult train(const TrainConfig& config, const TrainHooks& hooks, std::optional<Checkpoint> resume_from) {
  config.validate();
  const physics::NonDimScheme scheme = physics::make_scheme(config.constants);
  const physics::CollocationSet base =
      physics::make_collocation(config.n_interior, config.n_boundary, config.sample_seed, config.resample);

  TrainResult result;
  std::uint64_t start = 0;
  if (resume_from) {
    if (!(resume_from->params.arch == config.arch)) throw ConfigError("checkpoint architecture does not match config");
    result.params = std::move(resume_from->params);
    result.adam = resume_from->adam ? std::move(*resume_from->adam)
                                    : AdamState::zeros(result.params.flat.size(), config.lr);
    result.adam.lr = config.lr;
    start = resume_from->iteration;
  } else {
    result.params = model::init_params(config.arch, config.init_seed);
    result.adam = AdamState::zeros(result.params.flat.size(), config.lr);
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  EvalOptions eval = config.eval;
  eval.gradient = true;

  for (std::uint64_t it = start; it < config.iterations; ++it) {
    physics::CollocationSet fresh;
    const physics::CollocationSet* use = &base;
    if (config.resample == physics::ResamplePolicy::EveryIteration) {
      fresh = physics::collocation_for_iteration(base, it);
      use = &fresh;
    }
    const auto where = static_cast<std::ptrdiff_t>(it);
    Objective obj;
    try {
      obj = evaluate_objective(result.params, *use, scheme, config.weights, eval);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at iteration " + std::to_string(it), where);
    }

    for (auto [name, value] : {std::pair{"twist", obj.twist}, std::pair{"div", obj.div},
                               std::pair{"clo", obj.clo}, std::pair{"port", obj.port}}) {
      if (!std::isfinite(value)) {
        throw NumericalError("non-finite " + std::string(name) + " loss at iteration " + std::to_string(it), where);
      }
    }
    if (it % config.history_every == 0) {
      HistoryRecord rec{it, obj.total, obj.pde, obj.bc, elapsed()};
      result.history.records.push_back(rec);
      if (hooks.on_record) hooks.on_record(rec);
    }

    if (config.clip_norm) {
      double sq = 0.0;
      for (double g : obj.grad) sq += g * g;
      const double norm = std::sqrt(sq);
      if (norm > *config.clip_norm) {
        const double s = *config.clip_norm / norm;
        for (double& g : obj.grad) g *= s;
      }
    }
    try {
      adam_step(result.adam, result.params.flat, obj.grad);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (parameter " + std::to_string(e.where()) + ") at iteration " +
                               std::to_string(it),
                           where);
    }

    if (config.checkpoint_every > 0 && (it + 1) % config.checkpoint_every == 0 && hooks.on_checkpoint) {
      hooks.on_checkpoint(Checkpoint{result.params, config.init_seed, it + 1, result.adam});
    }
  }
  result.seconds = elapsed();
  return result;
}

}  // namespace peb::training
