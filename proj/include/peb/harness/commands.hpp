#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "peb/diagnostics/fields.hpp"
#include "peb/diagnostics/metrics.hpp"
#include "peb/harness/config.hpp"
#include "peb/harness/export.hpp"
#include "peb/training/trainer.hpp"

namespace peb::harness {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNumerical = 3 };

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> out;  // overrides output.directory
  std::optional<std::uint64_t> seed;         // sets init_seed and sample_seed
  std::optional<unsigned> threads;           // 0: sequential deterministic mode
};

// Each command reports progress on `log`, diagnostics on `err`, and returns
// an ExitCode instead of throwing.
//
// train     config -> config.json, checkpoint.json, checkpoints/ (when
//           checkpoint_every > 0), history.csv, metrics.csv, metrics_table.csv,
//           u_pred, T_pred_K, abs_error (.csv + .pgm each)
// sweep     sweep spec -> <backbone>/lr_<lr>/ run bundles, sweep.csv,
//           sweep_full.csv, snapshot.csv, snapshot_full.csv
// eval      checkpoint + config -> metrics.csv, u_pred, T_pred_K, abs_error
// reference [config] -> u_exact, T_exact_K, radial_fd.csv
// diagnose  checkpoint + config -> indicators.csv, two_sided.csv, bound.csv,
//           energy.csv, density_energy, density_residual
int cmd_train(const CommandOptions& opts, std::ostream& log, std::ostream& err);
int cmd_sweep(const CommandOptions& opts, std::ostream& log, std::ostream& err);
int cmd_eval(const CommandOptions& opts, std::ostream& log, std::ostream& err);
int cmd_reference(const CommandOptions& opts, std::ostream& log, std::ostream& err);
int cmd_diagnose(const CommandOptions& opts, std::ostream& log, std::ostream& err);

// A trained network, or the exact solution standing in for one. A
// checkpoint file {"format": "peb-analytic"} loads as the latter.
struct Predictor {
  std::optional<model::ModelParams> params;
  std::uint64_t iteration = 0;

  bool analytic() const { return !params.has_value(); }
};
Predictor load_predictor(const std::filesystem::path& path);
void write_analytic_fixture(const std::filesystem::path& path);

diagnostics::FieldSamples sample_predictor(const Predictor& p, const diagnostics::EvalGrid& grid,
                                           const physics::NonDimScheme& scheme);

struct TrainOutcome {
  training::TrainResult result;
  diagnostics::MetricsReport metrics;
};

// Train and write the full run bundle into `dir`. NumericalError propagates
// after the partial history has been written.
TrainOutcome train_and_export(const RunConfig& config, const std::filesystem::path& dir, std::ostream& log);

struct SweepRow {
  model::Backbone backbone = model::Backbone::PINN;
  double lr = 0.0;
  double total_seconds = 0.0;
  double seconds_per_epoch = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double mse = 0.0;
  bool failed = false;
};

// Best row per backbone (in order of first appearance): least RMSE rounded to
// two significant digits, then least MAE, then least MSE, then smaller lr.
// FAILED rows are never selected; a backbone with only FAILED rows is omitted.
std::vector<SweepRow> select_snapshot(const std::vector<SweepRow>& rows);
double round_significant(double v, int digits);

CsvTable sweep_table(const std::vector<SweepRow>& rows, bool full_precision);

std::filesystem::path sweep_run_dir(const std::filesystem::path& root, model::Backbone backbone, double lr);

}  // namespace peb::harness
