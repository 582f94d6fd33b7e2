#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "peb/errors.hpp"
#include "peb/harness/commands.hpp"
#include "peb/harness/config.hpp"
#include "peb/harness/export.hpp"
#include "support.hpp"

using namespace peb;
using namespace peb::harness;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

json minimal(int iterations = 10) {
  return json{{"model", {{"backbone", "LSTM_LNN_PINN"}, {"width", 8}}},
              {"train", {{"lr", 8e-4}, {"iterations", iterations}, {"n_interior", 128}, {"n_boundary", 32}}},
              {"eval", {{"resolution", 61}, {"ring_points", 180}}}};
}

// Runs the CLI binary and returns its exit status.
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(PEB_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// History without the wall-clock column.
std::vector<std::vector<std::string>> history_losses(const fs::path& p) {
  CsvTable t = read_csv(p);
  const std::size_t drop = t.column("seconds");
  for (auto& r : t.rows) r.erase(r.begin() + static_cast<std::ptrdiff_t>(drop));
  return t.rows;
}

std::ostringstream sink;

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults and overrides") {
    json doc = minimal();
    doc["problem"] = {{"h", 75.0}};
    doc["train"]["weights"] = {{"eps_clo", 0.05}};
    doc["train"]["resample"] = "every_iteration";
    doc["diagnostics"] = {{"alpha", {1.0, 2.0, 3.0}}, {"beta_g", 0.5}};
    const RunConfig c = parse_run_config(doc);
    CHECK(c.train.arch.backbone == model::Backbone::LSTM_LNN_PINN);
    CHECK(c.train.arch.depth == 2);
    CHECK(c.train.arch.width == 8);
    CHECK(c.train.constants.h == 75.0);
    CHECK(c.train.constants.k == 159.0);
    CHECK(c.train.weights.eps_clo == 0.05);
    CHECK(c.train.weights.w3 == 0.05);
    CHECK(c.train.resample == physics::ResamplePolicy::EveryIteration);
    CHECK(c.diagnostics.alpha.alpha3 == 3.0);
    CHECK(c.diagnostics.bound.beta_g == 0.5);
    CHECK(c.eval.resolution == 61);
    CHECK(c.train.eval.threads == 0);
  }

  TEST_CASE("errors name the field") {
    auto message = [](const json& doc) {
      try {
        parse_run_config(doc);
      } catch (const ConfigError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    json doc = minimal();
    doc["train"].erase("iterations");
    CHECK(message(doc).find("train.iterations") != std::string::npos);
    doc = minimal();
    doc["train"]["learning_rate"] = 1.0;
    CHECK(message(doc).find("train.learning_rate") != std::string::npos);
    doc = minimal();
    doc["model"]["backbone"] = "GRU";
    CHECK(message(doc).find("model.backbone") != std::string::npos);
    doc = minimal();
    doc["train"]["lr"] = "fast";
    CHECK(message(doc).find("train.lr") != std::string::npos);
    doc = minimal();
    doc["train"]["lr"] = -1.0;
    CHECK_FALSE(message(doc).empty());
    doc = minimal();
    doc["surprise"] = 1;
    CHECK(message(doc).find("surprise") != std::string::npos);
  }

  TEST_CASE("syntax errors report the line") {
    try {
      parse_json_text("{\n\"model\": {\n\"backbone\": \"PINN\",,\n}}", "cfg.json");
      FAIL("expected a parse error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }

  TEST_CASE("sweep spec") {
    const SweepSpec d = parse_sweep_spec(json::object());
    CHECK(d.backbones.size() == 4);
    REQUIRE(d.lrs.size() == 10);
    CHECK(d.lrs.front() == doctest::Approx(1e-4));
    CHECK(d.lrs.back() == doctest::Approx(1e-3));
    for (std::size_t i = 1; i < d.lrs.size(); ++i) CHECK(d.lrs[i] > d.lrs[i - 1]);
    CHECK_THROWS_AS(parse_sweep_spec(json{{"lrs", {1e-3, 1e-4}}}), ConfigError);
    CHECK_THROWS_AS(parse_sweep_spec(json{{"lrs", {1e-4, 1e-4}}}), ConfigError);
    CHECK_THROWS_AS(parse_sweep_spec(json{{"lrs", {-1e-4, 1e-4}}}), ConfigError);
    const SweepSpec s = parse_sweep_spec(json{{"backbones", {"PINN"}}, {"lrs", {2e-4, 5e-4}}, {"iterations", 7},
                                              {"base", minimal()}});
    const RunConfig c = sweep_run_config(s, model::Backbone::PINN, 5e-4);
    CHECK(c.train.arch.backbone == model::Backbone::PINN);
    CHECK(c.train.lr == 5e-4);
    CHECK(c.train.iterations == 7);
    CHECK(c.train.arch.width == 8);
  }
}

TEST_SUITE("export") {
  TEST_CASE("number formats") {
    CHECK(format_table(3.8312e-5) == "3.83e-05");
    CHECK(format_full(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_full(1.0 / 3.0)) == 1.0 / 3.0);
  }

  TEST_CASE("csv round trip") {
    const fs::path dir = testing::scratch_dir("csv");
    CsvTable t{{"a", "b"}, {{"1", format_full(M_PI)}, {"x", "nan"}}};
    write_csv(dir / "t.csv", t);
    const CsvTable back = read_csv(dir / "t.csv");
    CHECK(back.header == t.header);
    CHECK(back.rows == t.rows);
    CHECK(back.number(0, "b") == M_PI);
    CHECK(std::isnan(back.number(1, "b")));
    CHECK_THROWS_AS(back.column("c"), ConfigError);
    write_file(dir / "bad.csv", "a,b\n1,2,3\n");
    CHECK_THROWS_AS(read_csv(dir / "bad.csv"), ConfigError);
  }

  TEST_CASE("grid csv and pgm round trip") {
    const fs::path dir = testing::scratch_dir("pgm");
    const diagnostics::EvalGrid g = diagnostics::make_grid(41, 90);
    std::vector<double> f;
    for (const Point& p : g.inside) f.push_back(p.x * p.x - 0.3 * p.y);
    export_field(dir, "f", g, f);

    const auto rows = read_grid_csv(dir / "f.csv");
    REQUIRE(rows.size() == 41);
    const std::vector<double> raster = g.to_raster(f, NAN);
    for (int r = 0; r < 41; ++r) {
      REQUIRE(rows[r].size() == 41);
      for (int c = 0; c < 41; ++c) {
        const double want = raster[r * 41 + c];
        if (std::isnan(want)) {
          CHECK(std::isnan(rows[r][c]));
        } else {
          CHECK(rows[r][c] == want);
        }
      }
    }

    const PgmImage img = read_pgm(dir / "f.pgm");
    CHECK(img.width == 41);
    CHECK(img.height == 41);
    CHECK(read_file(dir / "f.pgm").starts_with("P5\n41 41\n255\n"));
    const PgmScale scale = read_pgm_scale(dir / "f.pgm");
    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    CHECK(scale.min == *lo);
    CHECK(scale.max == *hi);
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double decoded = scale.min + (scale.max - scale.min) * img.pixels[g.raster_of[k]] / 255.0;
      CHECK(std::abs(decoded - f[k]) <= 0.5 / 255.0 * (scale.max - scale.min) + 1e-15);
    }
  }

  TEST_CASE("snapshot selection") {
    using model::Backbone;
    std::vector<SweepRow> rows{
        {Backbone::PINN, 1e-4, 10, 0.1, 2.04e-4, 1.0e-4, 4.2e-8},
        {Backbone::PINN, 2e-4, 10, 0.1, 1.96e-4, 1.2e-4, 3.8e-8},  // same RMSE at two digits, larger MAE
        {Backbone::PINN, 3e-4, 10, 0.1, 1.0e-5, 1.0e-5, 1e-10, true},
        {Backbone::LNN_PINN, 1e-4, 10, 0.1, 5.0e-4, 4.0e-4, 2.5e-7},
        {Backbone::LNN_PINN, 2e-4, 10, 0.1, 3.0e-4, 2.0e-4, 9.0e-8},
    };
    const std::vector<SweepRow> snap = select_snapshot(rows);
    REQUIRE(snap.size() == 2);
    CHECK(snap[0].backbone == Backbone::PINN);
    CHECK(snap[0].lr == 1e-4);
    CHECK(snap[1].lr == 2e-4);
    rows[1].mae = 1.0e-4;
    CHECK(select_snapshot(rows)[0].lr == 2e-4);  // MAE tied, MSE decides
    CHECK(round_significant(1.96e-4, 2) == round_significant(2.04e-4, 2));

    const CsvTable t = sweep_table(rows, false);
    CHECK(t.rows[2].back() == "FAILED");
    CHECK(t.rows[2][4] == "nan");
    CHECK(t.rows[0][1] == "1.00e-04");
  }
}

TEST_SUITE("commands") {
  TEST_CASE("train bundle, determinism, eval and diagnose") {
    const fs::path dir = testing::scratch_dir("train");
    json doc = minimal();
    doc["train"]["checkpoint_every"] = 5;
    write_file(dir / "c.json", doc.dump(2));

    CommandOptions o{dir / "c.json", std::nullopt, dir / "a"};
    REQUIRE(cmd_train(o, sink, sink) == kExitOk);
    CHECK(read_file(dir / "a" / "config.json") == doc.dump(2) + "\n");
    for (const char* f : {"checkpoint.json", "checkpoints/checkpoint_00000005.json", "checkpoints/checkpoint_00000010.json",
                          "history.csv", "metrics.csv", "metrics_table.csv", "u_pred.csv", "u_pred.pgm",
                          "u_pred.pgm.txt", "abs_error.csv", "abs_error.pgm", "T_pred_K.csv"}) {
      CAPTURE(f);
      CHECK(fs::exists(dir / "a" / f));
    }
    CHECK(read_csv(dir / "a" / "history.csv").rows.size() == 10);
    const CsvTable m = read_csv(dir / "a" / "metrics.csv");
    CHECK(m.number(0, "seconds_per_epoch") ==
          doctest::Approx(m.number(0, "total_seconds") / 10.0).epsilon(1e-9));
    CHECK(m.number(0, "rmse_u") > 0.0);
    CHECK(m.number(0, "mse_u") == doctest::Approx(std::pow(m.number(0, "rmse_u"), 2)).epsilon(1e-12));
    load_predictor(dir / "a" / "checkpoint.json");
    read_pgm(dir / "a" / "abs_error.pgm");

    o.out = dir / "b";
    REQUIRE(cmd_train(o, sink, sink) == kExitOk);
    CHECK(history_losses(dir / "a" / "history.csv") == history_losses(dir / "b" / "history.csv"));
    CHECK(read_file(dir / "a" / "checkpoint.json") == read_file(dir / "b" / "checkpoint.json"));
    CHECK(read_file(dir / "a" / "u_pred.csv") == read_file(dir / "b" / "u_pred.csv"));

    CommandOptions e{dir / "c.json", dir / "a" / "checkpoint.json", dir / "eval"};
    REQUIRE(cmd_eval(e, sink, sink) == kExitOk);
    const CsvTable em = read_csv(dir / "eval" / "metrics.csv");
    CHECK(em.number(0, "rmse_u") == m.number(0, "rmse_u"));
    double err_max = 0.0;
    for (const auto& row : read_grid_csv(dir / "eval" / "abs_error.csv")) {
      for (double v : row) {
        if (!std::isnan(v)) err_max = std::max(err_max, v);
      }
    }
    CHECK(err_max > 0.0);

    CommandOptions d{dir / "c.json", dir / "a" / "checkpoint.json", dir / "diag"};
    REQUIRE(cmd_diagnose(d, sink, sink) == kExitOk);
    const CsvTable ind = read_csv(dir / "diag" / "indicators.csv");
    CHECK(ind.header == std::vector<std::string>{"patch_id", "center_x", "center_y", "h", "n_interior", "n_ring",
                                                 "eta_sq", "twist", "div", "port", "local_energy"});
    for (const char* f : {"two_sided.csv", "bound.csv", "energy.csv", "density_energy.csv", "density_energy.pgm",
                          "density_residual.csv", "density_residual.pgm"}) {
      CAPTURE(f);
      CHECK(fs::exists(dir / "diag" / f));
    }
    CHECK(read_csv(dir / "diag" / "two_sided.csv").header == std::vector<std::string>{"key", "value"});
  }

  TEST_CASE("analytic fixture") {
    const fs::path dir = testing::scratch_dir("fixture");
    write_file(dir / "c.json", minimal().dump());
    write_analytic_fixture(dir / "exact.json");
    CommandOptions e{dir / "c.json", dir / "exact.json", dir / "eval"};
    REQUIRE(cmd_eval(e, sink, sink) == kExitOk);
    CHECK(read_csv(dir / "eval" / "metrics.csv").number(0, "rmse_u") <= 1e-15);
    e.out = dir / "diag";
    REQUIRE(cmd_diagnose(e, sink, sink) == kExitOk);
    const CsvTable ind = read_csv(dir / "diag" / "indicators.csv");
    for (std::size_t r = 0; r < ind.rows.size(); ++r) CHECK(std::sqrt(ind.number(r, "eta_sq")) <= 1e-9);
  }

  TEST_CASE("grid refinement leaves the rmse stable") {
    const fs::path dir = testing::scratch_dir("refine");
    json doc = minimal(300);
    doc["train"]["lr"] = 3e-3;
    write_file(dir / "c.json", doc.dump());
    REQUIRE(cmd_train(CommandOptions{dir / "c.json", std::nullopt, dir / "run"}, sink, sink) == kExitOk);
    double rmse[2];
    int i = 0;
    for (int res : {201, 401}) {
      doc["eval"] = {{"resolution", res}};
      write_file(dir / "e.json", doc.dump());
      REQUIRE(cmd_eval(CommandOptions{dir / "e.json", dir / "run" / "checkpoint.json", dir / "ev"}, sink, sink) ==
              kExitOk);
      rmse[i++] = read_csv(dir / "ev" / "metrics.csv").number(0, "rmse_u");
    }
    CHECK(std::abs(rmse[0] - rmse[1]) <= 0.02 * rmse[1]);
  }

  TEST_CASE("reference export") {
    const fs::path dir = testing::scratch_dir("reference");
    REQUIRE(cmd_reference(CommandOptions{std::nullopt, std::nullopt, dir}, sink, sink) == kExitOk);
    const auto rows = read_grid_csv(dir / "u_exact.csv");
    CHECK(rows.size() == 201);
    CHECK(rows[100][100] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::isnan(rows[0][0]));
    const CsvTable radial = read_csv(dir / "radial_fd.csv");
    CHECK(radial.rows.size() == 1001);
    read_pgm(dir / "T_exact_K.pgm");
  }

  TEST_CASE("sweep") {
    const fs::path dir = testing::scratch_dir("sweep");
    json spec{{"backbones", {"PINN"}}, {"lrs", {1e-4, 1e-3}}, {"iterations", 100}, {"base", minimal()}};
    spec["base"]["eval"] = {{"resolution", 41}, {"ring_points", 90}};
    write_file(dir / "s.json", spec.dump());
    REQUIRE(cmd_sweep(CommandOptions{dir / "s.json", std::nullopt, dir / "out"}, sink, sink) == kExitOk);
    const CsvTable full = read_csv(dir / "out" / "sweep_full.csv");
    REQUIRE(full.rows.size() == 2);
    const CsvTable table = read_csv(dir / "out" / "sweep.csv");
    CHECK(table.rows.size() == 2);
    for (std::size_t r = 0; r < 2; ++r) {
      CHECK(full.number(r, "time_per_epoch_s") ==
            doctest::Approx(full.number(r, "training_time_s") / 100.0).epsilon(1e-9));
      CHECK(full.rows[r].back() == "ok");
    }
    const CsvTable snap = read_csv(dir / "out" / "snapshot_full.csv");
    REQUIRE(snap.rows.size() == 1);
    const std::size_t best = full.number(0, "rmse") <= full.number(1, "rmse") ? 0 : 1;
    CHECK(snap.rows[0] == full.rows[best]);
    CHECK(fs::exists(sweep_run_dir(dir / "out", model::Backbone::PINN, 1e-3) / "history.csv"));
  }

  TEST_CASE("sweep marks diverging runs as failed") {
    const fs::path dir = testing::scratch_dir("sweep_fail");
    json base = minimal();
    base["model"]["activation"] = "exp";
    json spec{{"backbones", {"PINN"}}, {"lrs", {1e-6, 1e3}}, {"iterations", 5}, {"base", base}};
    spec["base"]["eval"] = {{"resolution", 41}, {"ring_points", 90}};
    write_file(dir / "s.json", spec.dump());
    REQUIRE(cmd_sweep(CommandOptions{dir / "s.json", std::nullopt, dir / "out"}, sink, sink) == kExitOk);
    const CsvTable t = read_csv(dir / "out" / "sweep.csv");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].back() == "ok");
    CHECK(t.rows[1].back() == "FAILED");
    CHECK(read_csv(dir / "out" / "snapshot.csv").rows.size() == 1);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("exit codes") {
    const fs::path dir = testing::scratch_dir("cli");
    write_file(dir / "ok.json", minimal(3).dump());
    CHECK(run_cli("train --config " + (dir / "ok.json").string() + " --out " + (dir / "run").string(),
                  dir / "log1") == 0);

    json missing = minimal();
    missing["train"].erase("lr");
    write_file(dir / "missing.json", missing.dump());
    CHECK(run_cli("train --config " + (dir / "missing.json").string(), dir / "log2") == 2);
    CHECK(read_file(dir / "log2").find("train.lr") != std::string::npos);

    write_file(dir / "broken.json", "{\n  \"model\": {\"backbone\": \"PINN\"}\n  \"train\": {}\n}");
    CHECK(run_cli("train --config " + (dir / "broken.json").string(), dir / "log3") == 2);
    CHECK(read_file(dir / "log3").find("line 3") != std::string::npos);

    json other = minimal();
    other["model"]["backbone"] = "PINN";
    write_file(dir / "other.json", other.dump());
    CHECK(run_cli("eval --config " + (dir / "other.json").string() + " --checkpoint " +
                      (dir / "run" / "checkpoint.json").string() + " --out " + (dir / "ev").string(),
                  dir / "log4") == 2);

    json diverge = minimal(5);
    diverge["model"] = {{"backbone", "PINN"}, {"width", 8}, {"activation", "exp"}};
    diverge["train"]["lr"] = 1e3;
    write_file(dir / "diverge.json", diverge.dump());
    CHECK(run_cli("train --config " + (dir / "diverge.json").string() + " --out " + (dir / "dv").string(),
                  dir / "log5") == 3);
    CHECK(fs::exists(dir / "dv" / "history.csv"));

    CHECK(run_cli("train", dir / "log6") == 2);
    CHECK(run_cli("--help", dir / "log7") == 0);
  }

  TEST_CASE("seed and thread flags") {
    const fs::path dir = testing::scratch_dir("cli_flags");
    write_file(dir / "c.json", minimal(4).dump());
    const std::string base = "train --config " + (dir / "c.json").string();
    REQUIRE(run_cli(base + " --seed 5 --threads 0 --out " + (dir / "a").string(), dir / "l1") == 0);
    REQUIRE(run_cli(base + " --seed 5 --threads 2 --out " + (dir / "b").string(), dir / "l2") == 0);
    REQUIRE(run_cli(base + " --seed 6 --out " + (dir / "c").string(), dir / "l3") == 0);
    CHECK(read_file(dir / "a" / "checkpoint.json") == read_file(dir / "b" / "checkpoint.json"));
    CHECK(read_file(dir / "a" / "checkpoint.json") != read_file(dir / "c" / "checkpoint.json"));
  }
}
