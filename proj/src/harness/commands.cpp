#include "peb/harness/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "peb/diagnostics/bounds.hpp"
#include "peb/diagnostics/density_maps.hpp"
#include "peb/diagnostics/energy.hpp"
#include "peb/diagnostics/grid.hpp"
#include "peb/diagnostics/indicators.hpp"
#include "peb/errors.hpp"
#include "peb/physics/collocation.hpp"
#include "peb/reference/reference.hpp"

namespace peb::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kAnalyticFormat = "peb-analytic";

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const NumericalError& e) {
    err << "numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StructuralError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

RunConfig load_for(const CommandOptions& opts) {
  if (!opts.config) throw ConfigError("--config is required");
  RunConfig c = load_run_config(*opts.config);
  if (opts.seed) {
    c.train.init_seed = *opts.seed;
    c.train.sample_seed = *opts.seed;
  }
  if (opts.threads) c.train.eval.threads = *opts.threads;
  if (opts.out) c.output = *opts.out;
  c.train.validate();
  return c;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

diagnostics::EvalGrid grid_for(const RunConfig& c) {
  return diagnostics::make_grid(c.eval.resolution, c.eval.ring_points);
}

std::vector<double> head_values(const diagnostics::FieldSamples& s) {
  std::vector<double> v;
  v.reserve(s.interior.front().size());
  for (const auto& j : s.interior.front()) v.push_back(j.v);
  return v;
}

// Metrics plus the predicted, physical and absolute-error maps.
diagnostics::MetricsReport export_fields(const diagnostics::FieldSamples& samples, const diagnostics::EvalGrid& grid,
                                         const physics::NonDimScheme& scheme, const fs::path& dir) {
  diagnostics::MetricsReport m = diagnostics::compute_metrics(samples, grid, scheme);
  const std::vector<double> u = head_values(samples);
  std::vector<double> kelvin(u.size()), err(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    kelvin[k] = scheme.to_physical_temperature(u[k]);
    err[k] = std::abs(u[k] - reference::analytic_u(grid.inside[k].radius(), scheme));
  }
  export_field(dir, "u_pred", grid, u);
  export_field(dir, "T_pred_K", grid, kelvin);
  export_field(dir, "abs_error", grid, err);
  return m;
}

void check_architecture(const Predictor& p, const RunConfig& c) {
  if (p.analytic()) return;
  const model::Architecture& a = p.params->arch;
  const model::Architecture& b = c.train.arch;
  if (a.backbone != b.backbone || a.depth != b.depth || a.width != b.width || a.head != b.head ||
      a.activation != b.activation) {
    throw ConfigError("checkpoint architecture " + std::string(model::to_string(a.backbone)) + " " +
                      std::to_string(a.depth) + "x" + std::to_string(a.width) + " (" +
                      std::string(model::to_string(a.head)) + ") does not match the config's " +
                      std::string(model::to_string(b.backbone)) + " " + std::to_string(b.depth) + "x" +
                      std::to_string(b.width) + " (" + std::string(model::to_string(b.head)) + ")");
  }
}

Predictor predictor_for(const CommandOptions& opts, const RunConfig& c) {
  if (!opts.checkpoint) throw ConfigError("--checkpoint is required");
  Predictor p = load_predictor(*opts.checkpoint);
  check_architecture(p, c);
  return p;
}

}  // namespace

Predictor load_predictor(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const json doc = parse_json_text(ss.str(), path.string());
  if (doc.is_object() && doc.value("format", std::string()) == kAnalyticFormat) return Predictor{};
  training::Checkpoint ck = training::checkpoint_from_json(doc);
  return Predictor{std::move(ck.params), ck.iteration};
}

void write_analytic_fixture(const fs::path& path) { write_text(path, json{{"format", kAnalyticFormat}}.dump(2)); }

diagnostics::FieldSamples sample_predictor(const Predictor& p, const diagnostics::EvalGrid& grid,
                                           const physics::NonDimScheme& scheme) {
  return p.analytic() ? diagnostics::sample_analytic(grid, scheme) : diagnostics::sample_model(*p.params, grid);
}

TrainOutcome train_and_export(const RunConfig& config, const fs::path& dir, std::ostream& log) {
  prepare_dir(dir);
  write_text(dir / "config.json", config.source);
  const training::TrainConfig& tc = config.train;

  training::LossHistory partial;
  training::TrainHooks hooks;
  const std::uint64_t report_every = std::max<std::uint64_t>(1, tc.iterations / 10);
  hooks.on_record = [&](const training::HistoryRecord& r) {
    partial.records.push_back(r);
    if (r.iteration % report_every == 0) {
      char line[160];
      std::snprintf(line, sizeof line, "iter %llu  loss %.4e  pde %.4e  bc %.4e  %.1fs\n",
                    static_cast<unsigned long long>(r.iteration), r.loss_total, r.loss_pde, r.loss_bc, r.seconds);
      log << line << std::flush;
    }
  };
  if (tc.checkpoint_every > 0) {
    prepare_dir(dir / "checkpoints");
    hooks.on_checkpoint = [&](const training::Checkpoint& ck) {
      char name[64];
      std::snprintf(name, sizeof name, "checkpoint_%08llu.json", static_cast<unsigned long long>(ck.iteration));
      training::save_checkpoint(dir / "checkpoints" / name, ck);
    };
  }

  training::TrainResult result;
  try {
    result = training::train(tc, hooks);
  } catch (const NumericalError&) {
    write_csv(dir / "history.csv", history_table(partial));
    throw;
  }
  write_csv(dir / "history.csv", history_table(result.history));
  training::save_checkpoint(dir / "checkpoint.json",
                            training::Checkpoint{result.params, tc.init_seed, tc.iterations, result.adam});

  const physics::NonDimScheme scheme = physics::make_scheme(tc.constants);
  const diagnostics::EvalGrid grid = grid_for(config);
  diagnostics::MetricsReport m = export_fields(diagnostics::sample_model(result.params, grid), grid, scheme, dir);
  m.iterations = tc.iterations;
  m.total_seconds = result.seconds;
  m.seconds_per_epoch = tc.iterations > 0 ? result.seconds / static_cast<double>(tc.iterations) : 0.0;

  const RunLabel label{std::string(model::to_string(tc.arch.backbone)), tc.lr};
  write_csv(dir / "metrics.csv", metrics_table(label, m));
  CsvTable brief{{"backbone", "lr", "training_time_s", "time_per_epoch_s", "rmse", "mae", "mse"},
                 {{label.backbone, format_table(tc.lr), format_table(m.total_seconds),
                   format_table(m.seconds_per_epoch), format_table(m.u.rmse), format_table(m.u.mae),
                   format_table(m.u.mse)}}};
  write_csv(dir / "metrics_table.csv", brief);
  return {std::move(result), m};
}

int cmd_train(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig c = load_for(opts);
    const TrainOutcome o = train_and_export(c, c.output, log);
    log << "rmse_u " << format_table(o.metrics.u.rmse) << "  edge_ratio " << format_table(o.metrics.edge_ratio)
        << "  -> " << c.output.string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

double round_significant(double v, int digits) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
  return std::strtod(buf, nullptr);
}

std::vector<SweepRow> select_snapshot(const std::vector<SweepRow>& rows) {
  std::vector<SweepRow> best;
  auto better = [](const SweepRow& a, const SweepRow& b) {
    const double ra = round_significant(a.rmse, 2), rb = round_significant(b.rmse, 2);
    if (ra != rb) return ra < rb;
    if (a.mae != b.mae) return a.mae < b.mae;
    if (a.mse != b.mse) return a.mse < b.mse;
    return a.lr < b.lr;
  };
  std::vector<model::Backbone> order;
  for (const SweepRow& r : rows) {
    if (std::find(order.begin(), order.end(), r.backbone) == order.end()) order.push_back(r.backbone);
  }
  for (model::Backbone b : order) {
    const SweepRow* pick = nullptr;
    for (const SweepRow& r : rows) {
      if (r.backbone != b || r.failed || !std::isfinite(r.rmse)) continue;
      if (!pick || better(r, *pick)) pick = &r;
    }
    if (pick) best.push_back(*pick);
  }
  return best;
}

CsvTable sweep_table(const std::vector<SweepRow>& rows, bool full) {
  auto f = [full](double v) { return full ? format_full(v) : format_table(v); };
  CsvTable t{{"backbone", "lr", "training_time_s", "time_per_epoch_s", "rmse", "mae", "mse", "status"}, {}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const SweepRow& r : rows) {
    t.rows.push_back({std::string(model::to_string(r.backbone)), f(r.lr), f(r.total_seconds),
                      f(r.seconds_per_epoch), f(r.failed ? nan : r.rmse), f(r.failed ? nan : r.mae),
                      f(r.failed ? nan : r.mse), r.failed ? "FAILED" : "ok"});
  }
  return t;
}

fs::path sweep_run_dir(const fs::path& root, model::Backbone backbone, double lr) {
  char name[48];
  std::snprintf(name, sizeof name, "lr_%.3e", lr);
  return root / std::string(model::to_string(backbone)) / name;
}

int cmd_sweep(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    if (!opts.config) throw ConfigError("--config is required");
    SweepSpec spec = load_sweep_spec(*opts.config);
    if (opts.seed) spec.init_seed = spec.sample_seed = *opts.seed;
    if (opts.out) spec.output = *opts.out;
    if (opts.threads) spec.base["train"]["threads"] = *opts.threads;
    prepare_dir(spec.output);
    write_text(spec.output / "sweep_spec.json", spec.source);

    // Validate every cell before spending time on any of them.
    std::vector<std::pair<SweepRow, RunConfig>> cells;
    for (model::Backbone b : spec.backbones) {
      for (double lr : spec.lrs) cells.push_back({SweepRow{b, lr}, sweep_run_config(spec, b, lr)});
    }

    std::vector<SweepRow> rows;
    for (auto& [row, config] : cells) {
      const fs::path dir = sweep_run_dir(spec.output, row.backbone, row.lr);
      log << model::to_string(row.backbone) << " lr " << format_table(row.lr) << '\n';
      try {
        const TrainOutcome o = train_and_export(config, dir, log);
        row.total_seconds = o.metrics.total_seconds;
        row.seconds_per_epoch = o.metrics.seconds_per_epoch;
        row.rmse = o.metrics.u.rmse;
        row.mae = o.metrics.u.mae;
        row.mse = o.metrics.u.mse;
      } catch (const NumericalError& e) {
        err << model::to_string(row.backbone) << " lr " << format_table(row.lr) << " FAILED: " << e.what() << '\n';
        row.failed = true;
        row.total_seconds = row.seconds_per_epoch = std::numeric_limits<double>::quiet_NaN();
      }
      rows.push_back(row);
    }
    write_csv(spec.output / "sweep.csv", sweep_table(rows, false));
    write_csv(spec.output / "sweep_full.csv", sweep_table(rows, true));
    const std::vector<SweepRow> snap = select_snapshot(rows);
    write_csv(spec.output / "snapshot.csv", sweep_table(snap, false));
    write_csv(spec.output / "snapshot_full.csv", sweep_table(snap, true));
    return static_cast<int>(kExitOk);
  });
}

int cmd_eval(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig c = load_for(opts);
    const Predictor p = predictor_for(opts, c);
    prepare_dir(c.output);
    write_text(c.output / "config.json", c.source);
    const physics::NonDimScheme scheme = physics::make_scheme(c.train.constants);
    const diagnostics::EvalGrid grid = grid_for(c);
    diagnostics::MetricsReport m = export_fields(sample_predictor(p, grid, scheme), grid, scheme, c.output);
    m.iterations = p.iteration;
    const RunLabel label{p.analytic() ? std::string("analytic") : std::string(model::to_string(p.params->arch.backbone)),
                         c.train.lr};
    write_csv(c.output / "metrics.csv", metrics_table(label, m));
    log << "rmse_u " << format_table(m.u.rmse) << "  mae_u " << format_table(m.u.mae) << "  relerr_boundary "
        << format_table(m.relerr_boundary) << "  edge_ratio " << format_table(m.edge_ratio) << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_reference(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    physics::PhysicalConstants constants;
    EvalSettings eval;
    fs::path out = "reference";
    if (opts.config) {
      const RunConfig c = load_for(opts);
      constants = c.train.constants;
      eval = c.eval;
      out = c.output;
    }
    if (opts.out) out = *opts.out;
    prepare_dir(out);
    const physics::NonDimScheme scheme = physics::make_scheme(constants);
    const diagnostics::EvalGrid grid = diagnostics::make_grid(eval.resolution, eval.ring_points);
    std::vector<double> u(grid.inside.size()), kelvin(grid.inside.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
      u[k] = reference::analytic_u(grid.inside[k].radius(), scheme);
      kelvin[k] = scheme.to_physical_temperature(u[k]);
    }
    export_field(out, "u_exact", grid, u);
    export_field(out, "T_exact_K", grid, kelvin);

    const reference::RadialGridSolution fd = reference::radial_fd_solve(1001, scheme);
    CsvTable radial{{"r", "u_fd", "u_exact", "T_fd_K"}, {}};
    for (std::size_t i = 0; i < fd.r_nodes.size(); ++i) {
      radial.rows.push_back({format_full(fd.r_nodes[i]), format_full(fd.u_nodes[i]),
                             format_full(reference::analytic_u(fd.r_nodes[i], scheme)),
                             format_full(scheme.to_physical_temperature(fd.u_nodes[i]))});
    }
    write_csv(out / "radial_fd.csv", radial);
    log << "dT " << format_full(scheme.dT) << " K  Bi " << format_full(scheme.Bi) << "  fd max error "
        << format_table(fd.max_error(scheme)) << "  -> " << out.string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_diagnose(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig c = load_for(opts);
    const Predictor p = predictor_for(opts, c);
    prepare_dir(c.output);
    write_text(c.output / "config.json", c.source);
    const physics::NonDimScheme scheme = physics::make_scheme(c.train.constants);
    const diagnostics::EvalGrid grid = grid_for(c);
    const DiagnosticsSettings& ds = c.diagnostics;

    const diagnostics::FieldSamples samples = sample_predictor(p, grid, scheme);
    const diagnostics::ErrorJets e = diagnostics::error_jets(samples, grid, scheme);
    const diagnostics::ResidualFields r = diagnostics::residual_fields(samples, grid, scheme);
    const diagnostics::PatchPartition part = diagnostics::make_partition(grid, ds.patch_side);
    const diagnostics::IndicatorField eta = diagnostics::local_indicators(r, grid, part, ds.alpha);
    const std::vector<double> local = diagnostics::local_energy(e, grid, part, scheme);
    write_csv(c.output / "indicators.csv", indicator_table(part, eta, local));

    const diagnostics::TwoSidedReport two =
        diagnostics::two_sided_check(eta, e, grid, part, scheme, ds.two_sided);
    write_csv(c.output / "two_sided.csv", two_sided_table(two));

    const diagnostics::EnergyFunctional ef =
        diagnostics::energy_functional(e, grid, c.train.weights, scheme, r.clo);
    CsvTable energy{{"key", "value"},
                    {{"energy_norm_sq", format_full(two.energy)},
                     {"functional_twist", format_full(ef.twist)},
                     {"functional_div", format_full(ef.div)},
                     {"functional_clo", format_full(ef.clo)},
                     {"functional_port", format_full(ef.port)},
                     {"functional_total", format_full(ef.total)}}};
    write_csv(c.output / "energy.csv", energy);

    const diagnostics::DensityMaps maps =
        diagnostics::smoothed_density_maps(r, e, grid, part, scheme, ds.bandwidth, ds.alpha);
    export_field(c.output, "density_energy", grid, maps.energy);
    export_field(c.output, "density_residual", grid, maps.residual);

    if (!p.analytic()) {
      const std::vector<Point> pts = physics::sample_interior(static_cast<std::size_t>(ds.bound_samples),
                                                              ds.bound.seed);
      write_csv(c.output / "bound.csv", bound_table(diagnostics::second_order_bound(*p.params, pts, ds.bound)));
    }

    log << "energy " << format_table(two.energy) << "  eta_total " << format_table(two.eta_total);
    if (two.spearman) log << "  spearman " << format_table(*two.spearman);
    if (two.argmax_rank) log << "  argmax_rank " << format_table(*two.argmax_rank);
    log << "  two_sided " << (two.vacuous ? "vacuous" : two.passed ? "pass" : "fail") << '\n';
    return static_cast<int>(kExitOk);
  });
}

}  // namespace peb::harness
