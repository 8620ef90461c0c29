#pragma once

/// Experiment pipeline commands.  Each command is callable in-process (the
/// acceptance suite drives the same code paths the binary does).  Artifacts
/// are written once, named by the config hash; re-running a command reuses
/// existing files.
///
/// Cell selection: empty `modes` / `ranks` / `n_train` / `seed_indices`
/// means "the full grid from the config".

#include "ridgeline_cli/experiment.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ridgeline::cli {

struct CellFilter {
  std::vector<std::string> modes;
  std::vector<Eigen::Index> ranks;
  std::vector<Eigen::Index> n_train;
  std::vector<int> seed_indices;
};

/// Draws the parameter/observable data set, replacing failed evaluations up
/// to the retry cap, and persists the train/test split.
void cmd_generate_data(const ExperimentConfig& config);

/// kind ∈ {as, kle, pod, random}; persists the basis, its eigenvalue decay
/// CSV, and metadata.  "all" computes every kind the train modes need.
void cmd_compute_basis(const ExperimentConfig& config, const std::string& kind);

/// Trains the selected cells; persists weights, per-epoch history, and run
/// metadata.
void cmd_train(const ExperimentConfig& config, const CellFilter& filter);

/// Evaluates trained cells on the test split; persists one metrics row per
/// cell (mode, rank, n_train, seed, relative_error, accuracy, d_W,
/// wall_time).
void cmd_evaluate(const ExperimentConfig& config, const CellFilter& filter);

/// Input–output projection error on the test set for AS and KLE inputs at
/// the configured diagnostic ranks.
void cmd_project_error(const ExperimentConfig& config);

/// Nested-Monte-Carlo ridge-bound check at the configured diagnostic sizes.
void cmd_bound_check(const ExperimentConfig& config);

/// Aggregates metrics rows into mean ± sample-std tables plus the diagnostic
/// tables; writes report.json (machine, wall-time-free, byte-stable) and
/// report_*.csv (human).  Missing cells are listed as explicit gaps.
void cmd_report(const ExperimentConfig& config);

/// Runs generate-data, compute-basis, train, evaluate, and report for the
/// full grid (the complete experiment protocol end to end).
void cmd_run_all(const ExperimentConfig& config);

/// Artifact locations (all under config.out, prefixed by config.hash()).
struct ArtifactPaths {
  explicit ArtifactPaths(const ExperimentConfig& config);

  std::string data_dir, bases_dir, runs_dir, metrics_dir, diagnostics_dir;
  std::string hash;        // full-config hash (stamped on every row)
  std::string data_hash;   // {seed, map, field, data} scope
  std::string bases_hash;  // data scope + {bases}

  [[nodiscard]] std::string data(const std::string& which) const;   // m_train …
  [[nodiscard]] std::string basis(const std::string& kind, const std::string& part) const;
  [[nodiscard]] std::string cell(const std::string& dir, const std::string& mode,
                                 Eigen::Index rank, Eigen::Index n_train,
                                 int seed_index, const std::string& part) const;
  [[nodiscard]] std::string diagnostic(const std::string& name) const;
  [[nodiscard]] std::string report(const std::string& name) const;

  std::string out_root;
};

}  // namespace ridgeline::cli
