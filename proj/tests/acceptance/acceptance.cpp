// Acceptance run: one PASS/FAIL line per criterion on stdout, progress and
// details on stderr. Exit status is the number of failed criteria (capped).

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "peb/diagnostics/bounds.hpp"
#include "peb/diagnostics/density_maps.hpp"
#include "peb/diagnostics/energy.hpp"
#include "peb/diagnostics/fields.hpp"
#include "peb/diagnostics/grid.hpp"
#include "peb/diagnostics/indicators.hpp"
#include "peb/diagnostics/metrics.hpp"
#include "peb/diagnostics/statistics.hpp"
#include "peb/harness/commands.hpp"
#include "peb/harness/config.hpp"
#include "peb/harness/export.hpp"
#include "peb/model/model.hpp"
#include "peb/physics/collocation.hpp"
#include "peb/physics/residuals.hpp"
#include "peb/reference/reference.hpp"
#include "peb/training/adam.hpp"
#include "peb/training/checkpoint.hpp"
#include "peb/training/trainer.hpp"

namespace fs = std::filesystem;
using namespace peb;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string sci(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits, v);
  return buf;
}

struct Outcome {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<Outcome> outcomes;

void report(int id, const std::string& name, bool passed, const std::string& detail) {
  outcomes.push_back({id, name, passed, detail});
  std::printf("criterion %2d %-28s %s  %s\n", id, name.c_str(), passed ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

void info(const std::string& line) {
  std::printf("             %s\n", line.c_str());
  std::fflush(stdout);
}

const std::vector<model::Backbone> kBackbones{model::Backbone::PINN, model::Backbone::LNN_PINN,
                                              model::Backbone::LSTM_PINN, model::Backbone::LSTM_LNN_PINN};

double table_lr(model::Backbone b) {
  switch (b) {
    case model::Backbone::PINN: return 1e-4;
    case model::Backbone::LNN_PINN: return 7e-4;
    case model::Backbone::LSTM_PINN: return 1e-3;
    case model::Backbone::LSTM_LNN_PINN: return 8e-4;
  }
  return 0.0;
}

// ---------------------------------------------------------------- 1

model::ModelParams perturbed(const model::Architecture& arch, std::uint64_t seed) {
  model::ModelParams p = model::init_params(arch, seed);
  std::mt19937_64 rng(seed ^ 0x5bd1e995u);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (double& v : p.flat) v += noise(rng);
  return p;
}

void criterion_autodiff() {
  const auto t0 = Clock::now();
  const physics::NonDimScheme scheme = physics::make_scheme({});
  const double fd_h = 1e-3;
  const double grad_h = 1e-4;
  double worst_lap = 0.0, worst_grad = 0.0;
  int bad = 0, networks = 0;

  for (model::Backbone b : kBackbones) {
    for (int s = 0; s < 50; ++s) {
      const std::uint64_t seed = 1000 + 97 * static_cast<std::uint64_t>(b) + s;
      model::Architecture arch{b, 1 + s % 2, 4 + s % 5,
                               s % 3 == 2 ? model::HeadMode::Mixed : model::HeadMode::Potential};
      const model::ModelParams p = perturbed(arch, seed);
      ++networks;

      // Laplacian of every head against the five-point stencil.
      const std::vector<Point> pts = physics::sample_interior(8, seed);
      std::vector<Point> shifted;
      for (const Point& q : pts) {
        shifted.push_back(q);
        shifted.push_back({q.x + fd_h, q.y});
        shifted.push_back({q.x - fd_h, q.y});
        shifted.push_back({q.x, q.y + fd_h});
        shifted.push_back({q.x, q.y - fd_h});
      }
      const auto jets = model::evaluate_jets(p, pts);
      const auto vals = model::evaluate_jets(p, shifted);
      double err = 0.0, scale = 0.0;
      for (std::size_t k = 0; k < jets.size(); ++k) {
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const auto v = [&](std::size_t j) { return vals[k][5 * i + j].v; };
          const double fd = (v(1) + v(2) + v(3) + v(4) - 4.0 * v(0)) / (fd_h * fd_h);
          const double lap = jets[k][i].hxx + jets[k][i].hyy;
          err = std::max(err, std::abs(lap - fd));
          scale = std::max(scale, std::abs(fd));
        }
      }
      const double rel_lap = err / std::max(scale, 1e-300);

      // Parameter gradient of the training loss against central differences.
      const physics::CollocationSet set = physics::make_collocation(16, 8, seed);
      const training::Objective o = training::evaluate_objective(p, set, scheme, {}, {8, 0, true});
      auto loss = [&](const model::ModelParams& q) {
        return training::evaluate_objective(q, set, scheme, {}, {8, 0, false}).total;
      };
      double gerr = 0.0, gscale = 0.0;
      model::ModelParams q = p;
      for (std::size_t i = 0; i < p.flat.size(); ++i) {
        q.flat[i] = p.flat[i] + grad_h;
        const double lp = loss(q);
        q.flat[i] = p.flat[i] - grad_h;
        const double lm = loss(q);
        q.flat[i] = p.flat[i];
        const double fd = (lp - lm) / (2.0 * grad_h);
        gerr = std::max(gerr, std::abs(fd - o.grad[i]));
        gscale = std::max(gscale, std::abs(fd));
      }
      const double rel_grad = gerr / std::max(gscale, 1e-300);

      worst_lap = std::max(worst_lap, rel_lap);
      worst_grad = std::max(worst_grad, rel_grad);
      if (!(rel_lap <= 1e-5 && rel_grad <= 1e-5)) {
        ++bad;
        std::cerr << "  autodiff: " << model::to_string(b) << " seed " << seed << " laplacian " << sci(rel_lap)
                  << " gradient " << sci(rel_grad) << "\n";
      }
    }
  }
  const double secs = seconds_since(t0);
  report(1, "autodiff vs finite differences", bad == 0 && secs < 60.0,
         std::to_string(networks) + " networks, worst laplacian " + sci(worst_lap) + ", worst gradient " +
             sci(worst_grad) + " (<= 1e-5), " + sci(secs, 2) + " s (< 60)");
}

// ---------------------------------------------------------------- 2

void criterion_nullity() {
  const auto t0 = Clock::now();
  const physics::NonDimScheme scheme = physics::make_scheme({});
  const auto interior = physics::sample_interior(10000, 11);
  const auto boundary = physics::sample_boundary(10000, 12);
  double div = 0.0, port = 0.0, twist = 0.0, clo = 0.0;
  for (const Point& p : interior) {
    const auto r = physics::residual_potential(reference::analytic_jet(p, scheme), p, physics::Where::Interior, scheme);
    div = std::max(div, std::abs(r.div));
    twist = std::max({twist, std::abs(r.twist_x), std::abs(r.twist_y)});
    clo = std::max(clo, std::abs(r.clo));
  }
  for (const Point& p : boundary) {
    const auto r = physics::residual_potential(reference::analytic_jet(p, scheme), p, physics::Where::Boundary, scheme);
    port = std::max(port, std::abs(r.port.value_or(INFINITY)));
    div = std::max(div, std::abs(r.div));
  }
  const bool ok = div <= 1e-10 && port <= 1e-10 && twist <= 1e-12 && clo <= 1e-12;
  report(2, "exact-solution residuals", ok,
         "max|div| " + sci(div) + ", max|port| " + sci(port) + " (<= 1e-10), max|twist| " + sci(twist) +
             ", max|clo| " + sci(clo) + " (<= 1e-12), " + sci(seconds_since(t0), 2) + " s");
}

// ---------------------------------------------------------------- 3

void criterion_oracle() {
  const physics::NonDimScheme scheme = physics::make_scheme({});
  const double e1 = reference::radial_fd_solve(1001, scheme).max_error(scheme);
  const double e2 = reference::radial_fd_solve(2001, scheme).max_error(scheme);
  const double e4 = reference::radial_fd_solve(4001, scheme).max_error(scheme);
  const double r1 = e1 / e2, r2 = e2 / e4;
  const bool ok = e4 <= 1e-7 && r1 >= 3.0 && r1 <= 5.0 && r2 >= 3.0 && r2 <= 5.0;
  report(3, "finite-difference oracle", ok,
         "sup error n=4001 " + sci(e4) + " (<= 1e-7), ratios " + sci(r1) + ", " + sci(r2) + " (in [3, 5])");
}

// ---------------------------------------------------------------- 4

void criterion_adam() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd;
  const std::size_t n = 64;
  const double lr = 2e-3;
  std::vector<double> a(n), b(n), m(n, 0.0), v(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) a[i] = b[i] = nd(rng);
  training::AdamState s = training::AdamState::zeros(n, lr);
  double worst = 0.0;
  for (int t = 1; t <= 100; ++t) {
    std::vector<double> g(n);
    for (double& x : g) x = nd(rng) * std::exp(2.0 * nd(rng));
    training::adam_step(s, a, g);
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = 0.9 * m[i] + (1.0 - 0.9) * g[i];
      v[i] = 0.999 * v[i] + (1.0 - 0.999) * g[i] * g[i];
      const double mh = m[i] / (1.0 - std::pow(0.9, t));
      const double vh = v[i] / (1.0 - std::pow(0.999, t));
      b[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
      worst = std::max({worst, std::abs(a[i] - b[i]), std::abs(s.m[i] - m[i]), std::abs(s.v[i] - v[i])});
    }
  }

  training::AdamState h = training::AdamState::zeros(1, 1e-3);
  std::vector<double> p{0.0};
  training::adam_step(h, p, std::vector<double>{1.0});
  const double step1 = p[0];
  training::adam_step(h, p, std::vector<double>{1.0});
  const double step2 = p[0];
  // Bias correction makes both corrected moments exactly 1 in real
  // arithmetic, so the steps are -lr/(1+eps) and twice that. The usual
  // printed forms -9.99999990e-4 and -1.9999999e-3 are truncated to eight
  // digits. The second step carries the rounding of 1 - 0.999^2.
  const double exact2 = -2e-3 / (1.0 + 1e-8);
  const bool hand = step1 == -1e-3 / (1.0 + 1e-8) && std::abs(step2 - exact2) <= 1e-14 &&
                    std::abs(step1 - -9.99999990e-4) < 1e-12 && std::abs(step2 - -1.9999999e-3) < 1e-10;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10e, %.10e", step1, step2);
  report(4, "Adam oracle", worst <= 1e-14 && hand,
         "100 steps max deviation " + sci(worst) + " (<= 1e-14), hand steps " + buf);
}

// ---------------------------------------------------------------- 5..9

struct Run {
  model::Backbone backbone = model::Backbone::PINN;
  fs::path dir;
  harness::RunConfig config;
  model::ModelParams params;
  std::vector<std::pair<std::uint64_t, double>> loss;  // iteration, loss_total
  double seconds = 0.0;
  bool ok = false;
  std::string error;
};

nlohmann::json run_document(model::Backbone b, const fs::path& dir) {
  return {{"model", {{"backbone", std::string(model::to_string(b))}}},
          {"train",
           {{"lr", table_lr(b)},
            {"iterations", 5000},
            {"n_interior", 4096},
            {"n_boundary", 512},
            {"checkpoint_every", 500}}},
          {"output", {{"directory", dir.string()}}}};
}

Run desk_run(model::Backbone b, const fs::path& root, bool reuse) {
  Run run;
  run.backbone = b;
  run.dir = root / std::string(model::to_string(b));
  const nlohmann::json doc = run_document(b, run.dir);
  run.config = harness::parse_run_config(doc);
  run.config.source = doc.dump(2);

  const fs::path cfg = run.dir / "config.json";
  bool reused = false;
  if (reuse && fs::exists(run.dir / "checkpoint.json") && fs::exists(run.dir / "history.csv") && fs::exists(cfg)) {
    std::ifstream in(cfg);
    std::stringstream ss;
    ss << in.rdbuf();
    if (ss.str() == run.config.source) {
      run.params = training::load_checkpoint(run.dir / "checkpoint.json").params;
      const harness::CsvTable h = harness::read_csv(run.dir / "history.csv");
      for (std::size_t r = 0; r < h.rows.size(); ++r) {
        run.loss.emplace_back(static_cast<std::uint64_t>(h.number(r, "iteration")), h.number(r, "loss_total"));
      }
      run.seconds = h.rows.empty() ? 0.0 : h.number(h.rows.size() - 1, "seconds");
      run.ok = true;
      reused = true;
      std::cerr << "reusing " << run.dir << "\n";
    }
  }
  if (!reused) {
    fs::remove_all(run.dir);
    std::cerr << "training " << model::to_string(b) << " at lr " << table_lr(b) << "\n";
    try {
      const harness::TrainOutcome out = harness::train_and_export(run.config, run.dir, std::cerr);
      run.params = out.result.params;
      for (const auto& rec : out.result.history.records) run.loss.emplace_back(rec.iteration, rec.loss_total);
      run.seconds = out.result.seconds;
      run.ok = true;
    } catch (const std::exception& e) {
      run.error = e.what();
      std::cerr << "  run failed: " << e.what() << "\n";
    }
  }
  return run;
}

double late_log_std(const Run& run) {
  std::vector<double> x;
  for (const auto& [it, l] : run.loss) {
    if (it >= 4000) x.push_back(std::log10(l));
  }
  return x.size() < 2 ? NAN : diagnostics::stddev(x);
}

double window_median(const Run& run, std::uint64_t lo, std::uint64_t hi) {
  std::vector<double> x;
  for (const auto& [it, l] : run.loss) {
    if (it >= lo && it < hi) x.push_back(l);
  }
  return x.empty() ? NAN : diagnostics::median(x);
}

struct Evaluation {
  diagnostics::MetricsReport metrics;
  double energy = 0.0;
  double functional = 0.0;
  double spearman = NAN;
  double argmax_rank = NAN;
};

Evaluation evaluate(const model::ModelParams& params, const harness::RunConfig& config,
                    const diagnostics::EvalGrid& grid) {
  const physics::NonDimScheme scheme = physics::make_scheme(config.train.constants);
  const diagnostics::FieldSamples f = diagnostics::sample_model(params, grid);
  Evaluation ev;
  ev.metrics = diagnostics::compute_metrics(f, grid, scheme);
  const diagnostics::ErrorJets e = diagnostics::error_jets(f, grid, scheme);
  const diagnostics::ResidualFields r = diagnostics::residual_fields(f, grid, scheme);
  ev.energy = diagnostics::energy_norm_sq(e, grid, scheme);
  ev.functional = diagnostics::energy_functional(e, grid, config.train.weights, scheme, r.clo).total;
  const diagnostics::PatchPartition part = diagnostics::make_partition(grid, config.diagnostics.patch_side);
  const diagnostics::IndicatorField eta = diagnostics::local_indicators(r, grid, part, config.diagnostics.alpha);
  const diagnostics::TwoSidedReport rep =
      diagnostics::two_sided_check(eta, e, grid, part, scheme, config.diagnostics.two_sided);
  ev.spearman = rep.spearman.value_or(NAN);
  ev.argmax_rank = rep.argmax_rank.value_or(NAN);
  return ev;
}

void criteria_training(const fs::path& work, bool reuse) {
  const diagnostics::EvalGrid grid = diagnostics::make_grid(201, 720);
  std::map<model::Backbone, Run> runs;

  Run& best = runs[model::Backbone::LSTM_LNN_PINN] = desk_run(model::Backbone::LSTM_LNN_PINN, work, reuse);
  Evaluation final_eval;
  if (best.ok) final_eval = evaluate(best.params, best.config, grid);

  // 5
  if (best.ok) {
    const double rmse = final_eval.metrics.u.rmse;
    report(5, "desk-scale training", rmse <= 1e-3,
           "LSTM_LNN_PINN lr 8e-4, 5000 iterations: RMSE_u " + sci(rmse) + " (<= 1e-3), MAE_u " +
               sci(final_eval.metrics.u.mae) + ", RMSE_K " + sci(final_eval.metrics.kelvin.rmse) + ", " +
               sci(best.seconds, 2) + " s");
    info("full-budget (50000 iteration) run not performed here; 10x window is 3.83e-4 in u units");
  } else {
    report(5, "desk-scale training", false, "run failed: " + best.error);
  }

  // 7 (trained model part)
  const bool edge_ok = best.ok && final_eval.metrics.edge_ratio <= 3.0;

  // 8
  if (best.ok) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(best.dir / "checkpoints")) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<double> le, lf;
    std::string trace;
    for (const fs::path& f : files) {
      const training::Checkpoint c = training::load_checkpoint(f);
      const Evaluation ev = evaluate(c.params, best.config, grid);
      le.push_back(std::log(ev.energy));
      lf.push_back(std::log(ev.functional));
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s%llu:%.2f", trace.empty() ? "" : " ",
                    static_cast<unsigned long long>(c.iteration), ev.spearman);
      trace += buf;
      std::cerr << "  checkpoint " << c.iteration << ": energy " << sci(ev.energy) << " functional "
                << sci(ev.functional) << " ratio " << sci(ev.functional / ev.energy) << "\n";
    }
    double rho = NAN;
    if (le.size() >= 2) rho = diagnostics::pearson(le, lf);
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = 0; i < le.size(); ++i) {
      lo = std::min(lo, std::exp(lf[i] - le[i]));
      hi = std::max(hi, std::exp(lf[i] - le[i]));
    }
    report(8, "energy alignment", files.size() >= 10 && rho >= 0.95,
           std::to_string(files.size()) + " checkpoints (>= 10), Pearson of logs " + sci(rho) +
               " (>= 0.95), functional/energy in [" + sci(lo) + ", " + sci(hi) + "]");
    info("indicator Spearman by checkpoint: " + trace);
  } else {
    report(8, "energy alignment", false, "run failed");
  }

  // 9 and the bound check on the trained model
  if (best.ok) {
    const physics::NonDimScheme scheme = physics::make_scheme(best.config.train.constants);
    const diagnostics::FieldSamples f = diagnostics::sample_model(best.params, grid);
    const diagnostics::ErrorJets e = diagnostics::error_jets(f, grid, scheme);
    const diagnostics::ResidualFields r = diagnostics::residual_fields(f, grid, scheme);
    const diagnostics::PatchPartition part = diagnostics::make_partition(grid, best.config.diagnostics.patch_side);
    const diagnostics::IndicatorField eta = diagnostics::local_indicators(r, grid, part, best.config.diagnostics.alpha);
    const diagnostics::TwoSidedReport rep =
        diagnostics::two_sided_check(eta, e, grid, part, scheme, best.config.diagnostics.two_sided);
    const double rho = rep.spearman.value_or(NAN);
    const double rank = rep.argmax_rank.value_or(NAN);
    report(9, "indicator alignment", rho >= 0.8 && rank <= 0.2,
           "Spearman " + sci(rho) + " (>= 0.8), argmax patch " + std::to_string(rep.argmax_patch) +
               " at rank fraction " + sci(rank) + " (<= 0.2)");
    if (rep.ratio_min && rep.ratio_max) {
      info("local energy / eta^2 in [" + sci(*rep.ratio_min) + ", " + sci(*rep.ratio_max) + "], global " +
           sci(rep.global_ratio.value_or(NAN)));
    }
    const diagnostics::DensityMaps maps = diagnostics::smoothed_density_maps(
        r, e, grid, part, scheme, best.config.diagnostics.bandwidth, best.config.diagnostics.alpha);
    if (maps.core_ratio_min && maps.core_ratio_max) {
      info("density core ratio max/min " + sci(*maps.core_ratio_max / *maps.core_ratio_min));
    }

    const auto samples = physics::sample_interior(static_cast<std::size_t>(best.config.diagnostics.bound_samples),
                                                  best.config.diagnostics.bound.seed);
    const diagnostics::OperatorBoundReport b =
        diagnostics::second_order_bound(best.params, samples, best.config.diagnostics.bound);
    info("bound: sampled max |D2 u| " + sci(b.sampled_hessian_max) + ", sum-product " + sci(b.sum_product) +
         (b.dominance() ? " (dominates)" : " (VIOLATED)") + ", chain-order " + sci(b.sum_product_chain) +
         (b.dominance_chain() ? " (dominates)" : " (VIOLATED)") + ", gated " + sci(b.gated_bound));
  } else {
    report(9, "indicator alignment", false, "run failed");
  }

  // Remaining backbones for the stability ordering and the baseline edge ratio.
  for (model::Backbone b : kBackbones) {
    if (b != model::Backbone::LSTM_LNN_PINN) runs[b] = desk_run(b, work, reuse);
  }

  // 6
  {
    bool ok = true;
    std::string detail;
    const double mine = best.ok ? late_log_std(best) : NAN;
    for (model::Backbone b : kBackbones) {
      const Run& r = runs[b];
      const double s = r.ok ? late_log_std(r) : NAN;
      const double early = r.ok ? window_median(r, 0, 500) : NAN;
      const double late = r.ok ? window_median(r, 4500, 5001) : NAN;
      detail += std::string(detail.empty() ? "" : ", ") + std::string(model::to_string(b)) + " " + sci(s);
      info(std::string(model::to_string(b)) + " lr " + sci(table_lr(b), 1) + ": late std log10 loss " + sci(s) +
           ", median loss [0,500) " + sci(early) + " -> [4500,5000] " + sci(late) +
           (late < early ? " (descends)" : " (does not descend)") + (r.ok ? "" : " run failed: " + r.error));
      if (b != model::Backbone::LSTM_LNN_PINN && r.ok && !(mine < s)) ok = false;
      if (!r.ok && b == model::Backbone::LSTM_LNN_PINN) ok = false;
    }
    report(6, "stability ordering", ok && std::isfinite(mine), "std of log10 loss over iterations >= 4000: " + detail);
  }

  // 7
  {
    std::string detail = "LSTM_LNN_PINN edge ratio " + (best.ok ? sci(final_eval.metrics.edge_ratio) : "n/a") + " (<= 3)";
    const Run& pinn = runs[model::Backbone::PINN];
    if (pinn.ok) {
      const Evaluation ev = evaluate(pinn.params, pinn.config, grid);
      detail += ", PINN baseline " + sci(ev.metrics.edge_ratio) + " (reported, RMSE_u " + sci(ev.metrics.u.rmse) + ")";
    } else {
      detail += ", PINN baseline run failed";
    }
    report(7, "edge-error suppression", edge_ok, detail);
  }
}

// ---------------------------------------------------------------- 10

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(PEB_CLI) + " " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::set<std::string> kTimingColumns{"seconds", "total_seconds", "seconds_per_epoch", "training_time_s",
                                           "time_per_epoch_s"};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_grid_csv(const fs::path& p) {
  fs::path pgm = p;
  pgm.replace_extension(".pgm");
  return fs::exists(pgm);
}

// Parses every CSV and PGM below `root`; returns the number of files checked.
std::size_t reparse_all(const fs::path& root, std::vector<std::string>& problems) {
  std::size_t n = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const fs::path p = entry.path();
    try {
      if (p.extension() == ".csv") {
        if (is_grid_csv(p)) {
          const auto g = harness::read_grid_csv(p);
          if (g.empty()) problems.push_back(p.string() + ": empty grid");
        } else {
          const harness::CsvTable t = harness::read_csv(p);
          if (t.header.empty()) problems.push_back(p.string() + ": no header");
        }
        ++n;
      } else if (p.extension() == ".pgm") {
        const harness::PgmImage img = harness::read_pgm(p);
        const harness::PgmScale s = harness::read_pgm_scale(p);
        if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height || !(s.min <= s.max)) {
          problems.push_back(p.string() + ": inconsistent image");
        }
        ++n;
      }
    } catch (const std::exception& e) {
      problems.push_back(p.string() + ": " + e.what());
    }
  }
  return n;
}

// Compares two output trees file by file. CSV timing columns are skipped;
// logs are not compared.
std::size_t compare_trees(const fs::path& a, const fs::path& b, std::vector<std::string>& problems) {
  std::size_t n = 0;
  std::set<fs::path> seen;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file() || entry.path().extension() == ".log") continue;
    const fs::path rel = fs::relative(entry.path(), a);
    seen.insert(rel);
    const fs::path other = b / rel;
    if (!fs::exists(other)) {
      problems.push_back(rel.string() + ": missing in second run");
      continue;
    }
    ++n;
    if (rel.extension() == ".csv" && !is_grid_csv(entry.path())) {
      const harness::CsvTable x = harness::read_csv(entry.path());
      const harness::CsvTable y = harness::read_csv(other);
      bool same = x.header == y.header && x.rows.size() == y.rows.size();
      for (std::size_t r = 0; same && r < x.rows.size(); ++r) {
        for (std::size_t c = 0; c < x.header.size(); ++c) {
          if (kTimingColumns.count(x.header[c])) continue;
          if (x.rows[r][c] != y.rows[r][c]) same = false;
        }
      }
      if (!same) problems.push_back(rel.string() + ": differs");
    } else if (slurp(entry.path()) != slurp(other)) {
      problems.push_back(rel.string() + ": differs");
    }
  }
  for (const auto& entry : fs::recursive_directory_iterator(b)) {
    if (entry.is_regular_file() && entry.path().extension() != ".log" && !seen.count(fs::relative(entry.path(), b))) {
      problems.push_back(fs::relative(entry.path(), b).string() + ": missing in first run");
    }
  }
  return n;
}

void criterion_roundtrip(const fs::path& work) {
  const fs::path root = work / "roundtrip";
  fs::remove_all(root);
  fs::create_directories(root);

  const nlohmann::json cfg = {
      {"model", {{"backbone", "LSTM_LNN_PINN"}, {"depth", 2}, {"width", 8}}},
      {"train",
       {{"lr", 3e-3}, {"iterations", 40}, {"n_interior", 128}, {"n_boundary", 32}, {"checkpoint_every", 20}, {"chunk", 64}}},
      {"eval", {{"resolution", 65}, {"ring_points", 128}}},
      {"diagnostics", {{"patch_side", 0.25}, {"bound_samples", 64}}}};
  const nlohmann::json sweep = {{"backbones", {"PINN", "LSTM_PINN"}},
                                {"lrs", {1e-3, 2e-3}},
                                {"iterations", 10},
                                {"base", {{"model", {{"depth", 1}, {"width", 6}}},
                                          {"train", {{"n_interior", 64}, {"n_boundary", 16}, {"chunk", 64}}},
                                          {"eval", {{"resolution", 41}, {"ring_points", 64}}}}}};
  std::ofstream(root / "run.json") << cfg.dump(2);
  std::ofstream(root / "sweep.json") << sweep.dump(2);

  std::vector<std::string> problems;
  for (const char* tag : {"a", "b"}) {
    const fs::path out = root / tag;
    fs::create_directories(out);
    const std::string common = " --seed 5 --threads 0";
    const std::vector<std::pair<std::string, std::string>> steps{
        {"train", "train --config \"" + (root / "run.json").string() + "\" --out \"" + (out / "train").string() + "\"" + common},
        {"eval", "eval --config \"" + (root / "run.json").string() + "\" --checkpoint \"" +
                     (out / "train" / "checkpoint.json").string() + "\" --out \"" + (out / "eval").string() + "\"" + common},
        {"diagnose", "diagnose --config \"" + (root / "run.json").string() + "\" --checkpoint \"" +
                         (out / "train" / "checkpoint.json").string() + "\" --out \"" + (out / "diagnose").string() +
                         "\"" + common},
        {"reference", "reference --config \"" + (root / "run.json").string() + "\" --out \"" +
                          (out / "reference").string() + "\"" + common},
        {"sweep", "sweep --config \"" + (root / "sweep.json").string() + "\" --out \"" + (out / "sweep").string() +
                      "\" --threads 0"},
    };
    for (const auto& [name, args] : steps) {
      const int code = run_cli(args, root / (std::string(tag) + "_" + name + ".log"));
      if (code != 0) problems.push_back(std::string(tag) + " " + name + " exited with " + std::to_string(code));
    }
  }
  const std::size_t parsed = reparse_all(root / "a", problems) + reparse_all(root / "b", problems);
  const std::size_t compared = compare_trees(root / "a", root / "b", problems);
  for (const std::string& p : problems) std::cerr << "  roundtrip: " << p << "\n";
  report(10, "harness round-trip", problems.empty() && parsed > 0,
         std::to_string(parsed) + " CSV/PGM files re-parsed, " + std::to_string(compared) +
             " files compared across two runs, " + std::to_string(problems.size()) + " problems");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  fs::path work = fs::temp_directory_path() / "peb_acceptance";
  bool reuse = false;
  std::vector<int> only;
  app.add_option("--work", work, "directory for run outputs");
  app.add_flag("--reuse", reuse, "reuse finished training runs with an identical configuration");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  fs::create_directories(work);
  auto wanted = [&](std::initializer_list<int> ids) {
    if (only.empty()) return true;
    for (int id : ids) {
      if (std::find(only.begin(), only.end(), id) != only.end()) return true;
    }
    return false;
  };
  const auto t0 = Clock::now();
  try {
    if (wanted({1})) criterion_autodiff();
    if (wanted({2})) criterion_nullity();
    if (wanted({3})) criterion_oracle();
    if (wanted({4})) criterion_adam();
    if (wanted({10})) criterion_roundtrip(work);
    if (wanted({5, 6, 7, 8, 9})) criteria_training(work / "desk", reuse);
  } catch (const std::exception& e) {
    std::printf("aborted: %s\n", e.what());
    return 100;
  }

  std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
  int failed = 0;
  std::printf("\nsummary (%s s)\n", sci(seconds_since(t0), 2).c_str());
  for (const Outcome& o : outcomes) {
    std::printf("%s %2d %s\n", o.passed ? "PASS" : "FAIL", o.id, o.name.c_str());
    failed += o.passed ? 0 : 1;
  }
  return std::min(failed, 99);
}
