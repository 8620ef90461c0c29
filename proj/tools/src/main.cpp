// ridgeline: derivative-informed projected neural network surrogate
// experiments.  Subcommands drive the pipeline stages; see README.md.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include "ridgeline_cli/commands.hpp"
#include "ridgeline_cli/experiment.hpp"

#include "ridgeline/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using ridgeline::cli::CellFilter;
using ridgeline::cli::ExperimentConfig;

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // overrides config.seed
  std::optional<std::string> out;     // overrides config.out
};

/// Precedence: defaults < config file < command-line flags.
ExperimentConfig resolve_config(const GlobalFlags& flags) {
  ExperimentConfig config = flags.config_path.empty()
                                ? ExperimentConfig{}
                                : ExperimentConfig::load(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.out) config.out = *flags.out;
  config.validate_and_clamp();
  return config;
}

void add_global_flags(CLI::App* cmd, GlobalFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Experiment config JSON file");
  cmd->add_option("--seed", flags.seed, "Master seed (overrides config)");
  cmd->add_option("--out", flags.out, "Output directory (overrides config)");
}

void add_cell_flags(CLI::App* cmd, CellFilter& filter) {
  cmd->add_option("--mode", filter.modes,
                  "Surrogate mode(s) {as,kle,rs,fs}; default: all in config");
  cmd->add_option("--rank", filter.ranks, "Rank(s); default: all in config");
  cmd->add_option("--ntrain", filter.n_train,
                  "Training-set size(s); default: all in config");
  cmd->add_option("--seed-index", filter.seed_indices,
                  "Training seed index(es); default: 0..seeds-1");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ridgeline: projected neural network surrogates for parametric maps"};
  app.require_subcommand(1);

  GlobalFlags flags;
  CellFilter filter;
  std::string basis_kind = "all";

  CLI::App* generate = app.add_subcommand(
      "generate-data", "Sample parameters, evaluate the map, persist splits");
  add_global_flags(generate, flags);

  CLI::App* basis = app.add_subcommand(
      "compute-basis", "Compute and persist a reduced basis (as|kle|pod|random|all)");
  add_global_flags(basis, flags);
  basis->add_option("--kind", basis_kind, "Basis kind (default: all)");

  CLI::App* train =
      app.add_subcommand("train", "Train surrogate cells (mode, rank, N, seed)");
  add_global_flags(train, flags);
  add_cell_flags(train, filter);

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Evaluate trained cells on the test split");
  add_global_flags(evaluate, flags);
  add_cell_flags(evaluate, filter);

  CLI::App* project = app.add_subcommand(
      "project-error", "Input–output projection error vs rank (AS and KLE)");
  add_global_flags(project, flags);

  CLI::App* bound = app.add_subcommand(
      "bound-check", "Nested-MC ridge-function error bound check");
  add_global_flags(bound, flags);

  CLI::App* report = app.add_subcommand(
      "report", "Aggregate metrics into CSV/JSON tables (mean ± std over seeds)");
  add_global_flags(report, flags);

  CLI::App* run_all = app.add_subcommand(
      "run-all", "generate-data, compute-basis, train, evaluate, report");
  add_global_flags(run_all, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // bad usage is a configuration error
  }

  try {
    ExperimentConfig config = resolve_config(flags);
    if (generate->parsed()) ridgeline::cli::cmd_generate_data(config);
    if (basis->parsed()) ridgeline::cli::cmd_compute_basis(config, basis_kind);
    if (train->parsed()) ridgeline::cli::cmd_train(config, filter);
    if (evaluate->parsed()) ridgeline::cli::cmd_evaluate(config, filter);
    if (project->parsed()) ridgeline::cli::cmd_project_error(config);
    if (bound->parsed()) ridgeline::cli::cmd_bound_check(config);
    if (report->parsed()) ridgeline::cli::cmd_report(config);
    if (run_all->parsed()) ridgeline::cli::cmd_run_all(config);
  } catch (const ridgeline::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ridgeline::ErrorKind::Config ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
