#include <iostream>

#include <CLI11.hpp>

#include "peb/harness/commands.hpp"

namespace {

void add_common(CLI::App* sub, peb::harness::CommandOptions& o, bool checkpoint) {
  sub->add_option("--config", o.config, "JSON run configuration");
  sub->add_option("--out", o.out, "output directory (overrides output.directory)");
  sub->add_option("--seed", o.seed, "sets both the initialisation and the sampling seed");
  sub->add_option("--threads", o.threads, "worker threads, 0 = sequential deterministic mode");
  if (checkpoint) sub->add_option("--checkpoint", o.checkpoint, "checkpoint JSON")->required();
}

}  // namespace

int main(int argc, char** argv) {
  namespace h = peb::harness;
  CLI::App app{"Physics-informed networks for steady heat conduction on a disk"};
  app.require_subcommand(1);

  h::CommandOptions opts;
  auto* train = app.add_subcommand("train", "train one model and export its run bundle");
  auto* sweep = app.add_subcommand("sweep", "learning-rate sweep over backbones");
  auto* eval = app.add_subcommand("eval", "metrics and field maps of a checkpoint");
  auto* reference = app.add_subcommand("reference", "exact field and radial finite-difference profile");
  auto* diagnose = app.add_subcommand("diagnose", "local indicators, density maps and operator bounds");
  add_common(train, opts, false);
  add_common(sweep, opts, false);
  add_common(eval, opts, true);
  add_common(reference, opts, false);
  add_common(diagnose, opts, true);
  for (auto* sub : {train, sweep, eval, diagnose}) sub->get_option("--config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : h::kExitConfig;
  }

  if (*train) return h::cmd_train(opts, std::cout, std::cerr);
  if (*sweep) return h::cmd_sweep(opts, std::cout, std::cerr);
  if (*eval) return h::cmd_eval(opts, std::cout, std::cerr);
  if (*reference) return h::cmd_reference(opts, std::cout, std::cerr);
  return h::cmd_diagnose(opts, std::cout, std::cerr);
}
