#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "peb/diagnostics/bounds.hpp"
#include "peb/diagnostics/indicators.hpp"
#include "peb/training/trainer.hpp"

namespace peb::harness {

struct EvalSettings {
  int resolution = 201;
  int ring_points = 720;
};

struct DiagnosticsSettings {
  double patch_side = 0.125;
  std::optional<double> bandwidth;  // default: half the patch scale
  diagnostics::IndicatorWeights alpha;
  diagnostics::TwoSidedOptions two_sided;
  int bound_samples = 256;
  diagnostics::BoundOptions bound;
};

// A run configuration. Every section and key is optional except
// model.backbone, train.lr and train.iterations; unknown keys are errors.
//
//   problem:     k, Q, h, T_inf, R
//   model:       backbone, depth, width, head ("potential"|"mixed"), activation
//   train:       lr, iterations, init_seed, sample_seed, n_interior, n_boundary,
//                resample ("fixed"|"every_iteration"), checkpoint_every,
//                history_every, clip_norm, chunk, threads,
//                weights {w1, w2, w3, w4, eps_clo, h_omega, h_gamma}
//   eval:        resolution, ring_points
//   diagnostics: patch_side, bandwidth, alpha [a1, a2, a3], bound_samples,
//                beta_g, power_iterations, power_tolerance, random_directions,
//                ratio_low, ratio_high, min_spearman, top_fraction
//   output:      directory
//
// When weights.eps_clo is given without weights.w3, w3 takes its value.
struct RunConfig {
  training::TrainConfig train;
  EvalSettings eval;
  DiagnosticsSettings diagnostics;
  std::filesystem::path output = "run";
  std::string source;  // the document as read, echoed into the output directory
};

// Throws ConfigError naming the offending field (dotted path) or the parse
// position.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json parse_json_text(const std::string& text, const std::string& origin);

// Learning-rate sweep:
//   backbones: list (default all four), lrs: strictly increasing positive
//   list (default 1e-4 .. 1e-3 step 1e-4), iterations, init_seed,
//   sample_seed, base: run-config sections shared by every run (model
//   backbone and train lr/iterations are filled per run), output {directory}.
struct SweepSpec {
  std::vector<model::Backbone> backbones;
  std::vector<double> lrs;
  nlohmann::json base;
  std::uint64_t iterations = 50000;
  std::uint64_t init_seed = 0;
  std::uint64_t sample_seed = 1;
  std::filesystem::path output = "sweep";
  std::string source;
};

SweepSpec parse_sweep_spec(const nlohmann::json& doc);
SweepSpec load_sweep_spec(const std::filesystem::path& path);
// The run configuration of one sweep cell.
RunConfig sweep_run_config(const SweepSpec& spec, model::Backbone backbone, double lr);

std::vector<double> default_learning_rates();

}  // namespace peb::harness
