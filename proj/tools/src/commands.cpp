#include "ridgeline_cli/commands.hpp"

#include "ridgeline/array_store.hpp"
#include "ridgeline/basis.hpp"
#include "ridgeline/errors.hpp"
#include "ridgeline/parallel.hpp"
#include "ridgeline/subspaces.hpp"
#include "ridgeline/surrogate.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace ridgeline::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", x);
  return std::string(buffer);
}

void write_text(const std::string& path, const std::string& text) {
  fs::create_directories(fs::path(path).parent_path());
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    require_config(out.good(), "cannot open '" + tmp + "' for writing");
    out << text;
    require_numerical(out.good(), "write failed for '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

void write_json_file(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require_config(in.good(), "cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw_config("invalid JSON in '" + path + "': " + e.what());
  }
  return j;
}

void save_matrix_once(const std::string& path, const Eigen::MatrixXd& m) {
  if (fs::exists(path)) return;
  fs::create_directories(fs::path(path).parent_path());
  std::string tmp = path + ".tmp";
  array_store::save_matrix(tmp, m);
  fs::rename(tmp, path);
}

void save_vector_once(const std::string& path, const Eigen::VectorXd& v) {
  if (fs::exists(path)) return;
  fs::create_directories(fs::path(path).parent_path());
  std::string tmp = path + ".tmp";
  array_store::save_vector(tmp, v);
  fs::rename(tmp, path);
}

struct DataSet {
  Eigen::MatrixXd m_train, q_train, m_test, q_test;
};

DataSet load_data(const ArtifactPaths& paths) {
  require_config(fs::exists(paths.data("meta.json")),
                 "data not found (run generate-data first): " +
                     paths.data("meta.json"));
  DataSet data;
  data.m_train = array_store::load_matrix(paths.data("m_train.rla"));
  data.q_train = array_store::load_matrix(paths.data("q_train.rla"));
  data.m_test = array_store::load_matrix(paths.data("m_test.rla"));
  data.q_test = array_store::load_matrix(paths.data("q_test.rla"));
  return data;
}

void save_basis(const ArtifactPaths& paths, const std::string& kind,
                const ReducedBasis& basis, const Eigen::VectorXd* mean,
                bool truncated) {
  save_matrix_once(paths.basis(kind, "matrix.rla"), basis.matrix);
  save_vector_once(paths.basis(kind, "eigenvalues.rla"), basis.eigenvalues);
  if (mean != nullptr) save_vector_once(paths.basis(kind, "mean.rla"), *mean);

  std::ostringstream csv;
  csv << "config_hash,index,eigenvalue\n";
  for (Eigen::Index i = 0; i < basis.eigenvalues.size(); ++i)
    csv << paths.bases_hash << ',' << i << ',' << fmt(basis.eigenvalues[i]) << '\n';
  write_text(paths.basis(kind, "eigenvalues.csv"), csv.str());

  json meta;
  meta["config_hash"] = paths.bases_hash;
  meta["kind"] = to_string(basis.kind);
  meta["orthogonality"] = to_string(basis.orthogonality);
  meta["rank"] = basis.rank();
  meta["dim"] = basis.dim();
  meta["seed"] = basis.seed;
  meta["sample_count"] = basis.sample_count;
  meta["truncated"] = truncated;
  write_json_file(paths.basis(kind, "meta.json"), meta);
}

ReducedBasis load_basis(const ArtifactPaths& paths, const std::string& kind) {
  const std::string meta_path = paths.basis(kind, "meta.json");
  require_config(fs::exists(meta_path),
                 "basis '" + kind + "' not found (run compute-basis first): " +
                     meta_path);
  json meta = read_json_file(meta_path);
  ReducedBasis basis;
  basis.matrix = array_store::load_matrix(paths.basis(kind, "matrix.rla"));
  basis.eigenvalues = array_store::load_vector(paths.basis(kind, "eigenvalues.rla"));
  std::string k = meta.at("kind").get<std::string>();
  basis.kind = k == "as"           ? BasisKind::AS
               : k == "kle"        ? BasisKind::KLE
               : k == "pod"        ? BasisKind::POD
               : k == "random_input" ? BasisKind::RandomInput
                                     : BasisKind::RandomOutput;
  basis.orthogonality = meta.at("orthogonality").get<std::string>() == "weighted_cinv"
                            ? BasisOrthogonality::WeightedCinv
                            : BasisOrthogonality::Identity;
  basis.seed = meta.at("seed").get<std::uint64_t>();
  basis.sample_count = meta.at("sample_count").get<Eigen::Index>();
  return basis;
}

/// Leading-r slice of a stored basis (nested-basis convention: smaller ranks
/// reuse the leading columns of the deepest computed decomposition).
ReducedBasis slice(const ReducedBasis& basis, Eigen::Index r) {
  require_config(r >= 1 && r <= basis.rank(),
                 "rank " + std::to_string(r) + " exceeds stored basis rank " +
                     std::to_string(basis.rank()));
  ReducedBasis out = basis;
  out.matrix = basis.matrix.leftCols(r);
  out.eigenvalues = basis.eigenvalues.head(r);
  return out;
}

struct CellKey {
  std::string mode;
  Eigen::Index rank = 0;
  Eigen::Index n_train = 0;
  int seed_index = 0;
};

std::vector<CellKey> expand_cells(const ExperimentConfig& config,
                                  const CellFilter& filter) {
  const auto& modes = filter.modes.empty() ? config.train.modes : filter.modes;
  const auto& ranks = filter.ranks.empty() ? config.bases.ranks : filter.ranks;
  const auto& n_train =
      filter.n_train.empty() ? config.train.n_train : filter.n_train;
  std::vector<int> seeds = filter.seed_indices;
  if (seeds.empty())
    for (int s = 0; s < config.train.seeds; ++s) seeds.push_back(s);

  std::vector<CellKey> cells;
  for (const std::string& mode : modes)
    for (Eigen::Index rank : ranks)
      for (Eigen::Index n : n_train)
        for (int s : seeds) cells.push_back(CellKey{mode, rank, n, s});
  return cells;
}

std::uint64_t train_seed_of(const ExperimentConfig& config, int seed_index) {
  return config.train.base_seed + static_cast<std::uint64_t>(seed_index);
}

/// Builds the network spec for a cell.  The input layer comes from the
/// stored AS/KLE basis (orthonormalized, optionally eigenvalue-rescaled), a
/// per-seed random basis (RS), or is trainable (FS); the output layer and
/// shift always initialize from POD.
surrogate::NetworkSpec build_spec(const ExperimentConfig& config,
                                  const ArtifactPaths& paths,
                                  const CellKey& cell) {
  surrogate::NetworkSpec spec;
  spec.mode = surrogate::mode_from_string(cell.mode);
  spec.input_dim = config.input_dim();
  spec.input_rank = cell.rank;
  spec.output_rank = cell.rank;
  spec.output_dim = config.output_dim();

  ReducedBasis pod_basis = load_basis(paths, "pod");
  require_config(pod_basis.rank() >= cell.rank,
                 "rank " + std::to_string(cell.rank) +
                     " exceeds the stored POD rank " +
                     std::to_string(pod_basis.rank()) +
                     " (degenerate snapshots?)");
  spec.output_init = pod_basis.matrix.leftCols(cell.rank);
  spec.output_shift = array_store::load_vector(paths.basis("pod", "mean.rla"));

  if (spec.mode == surrogate::Mode::AS || spec.mode == surrogate::Mode::KLE) {
    ReducedBasis input =
        slice(load_basis(paths, cell.mode), cell.rank);
    spec.input_layer =
        subspaces::orthogonalize_rescale(input, config.bases.rescale).matrix;
  } else if (spec.mode == surrogate::Mode::RS) {
    Rng rs_rng = Rng(config.seed)
                     .child(Streams::kRandomBasis)
                     .child(train_seed_of(config, cell.seed_index));
    spec.input_layer =
        subspaces::random_basis(spec.input_dim, cell.rank, rs_rng).matrix;
  }
  return spec;
}

surrogate::TrainConfig train_config_of(const ExperimentConfig& config,
                                       int seed_index) {
  surrogate::TrainConfig tc;
  tc.optimizer = surrogate::optimizer_from_string(config.train.optimizer);
  tc.epochs = config.train.epochs;
  tc.seed = train_seed_of(config, seed_index);
  tc.adam_step = config.train.adam_step;
  tc.adam_beta1 = config.train.adam_beta1;
  tc.adam_beta2 = config.train.adam_beta2;
  tc.lm_damping = config.train.lm_damping;
  tc.cg_tolerance = config.train.cg_tolerance;
  tc.cg_max_iters = config.train.cg_max_iters;
  return tc;
}

json projection_rows(const ExperimentConfig& config, const ArtifactPaths& paths);

}  // namespace

ArtifactPaths::ArtifactPaths(const ExperimentConfig& config)
    : hash(config.hash()),
      data_hash(config.hash(ExperimentConfig::HashScope::Data)),
      bases_hash(config.hash(ExperimentConfig::HashScope::Bases)),
      out_root(config.out) {
  data_dir = (fs::path(out_root) / "data").string();
  bases_dir = (fs::path(out_root) / "bases").string();
  runs_dir = (fs::path(out_root) / "runs").string();
  metrics_dir = (fs::path(out_root) / "metrics").string();
  diagnostics_dir = (fs::path(out_root) / "diagnostics").string();
}

std::string ArtifactPaths::data(const std::string& which) const {
  return (fs::path(data_dir) / (data_hash + "." + which)).string();
}

std::string ArtifactPaths::basis(const std::string& kind,
                                 const std::string& part) const {
  return (fs::path(bases_dir) / (bases_hash + "." + kind + "." + part)).string();
}

std::string ArtifactPaths::cell(const std::string& dir, const std::string& mode,
                                Eigen::Index rank, Eigen::Index n_train,
                                int seed_index, const std::string& part) const {
  std::ostringstream name;
  name << hash << '.' << mode << ".r" << rank << ".n" << n_train << ".s"
       << seed_index << '.' << part;
  return (fs::path(dir) / name.str()).string();
}

std::string ArtifactPaths::diagnostic(const std::string& name) const {
  return (fs::path(diagnostics_dir) / (hash + "." + name)).string();
}

std::string ArtifactPaths::report(const std::string& name) const {
  return (fs::path(out_root) / name).string();
}

void cmd_generate_data(const ExperimentConfig& config) {
  ArtifactPaths paths(config);
  if (fs::exists(paths.data("meta.json"))) {
    std::cerr << "generate-data: reusing " << paths.data("meta.json") << "\n";
    return;
  }

  auto map = config.make_map();
  field::PrecisionRoot root = field::PrecisionRoot::build(config.field_config());
  Rng rng = Rng(config.seed).child(Streams::kData);

  const Eigen::Index total = config.data.total;
  Eigen::MatrixXd m = root.sample(total, rng);
  Eigen::MatrixXd q(map->output_dim(), total);
  std::vector<char> ok(static_cast<std::size_t>(total), 0);

  auto evaluate_block = [&](const std::vector<Eigen::Index>& indices) {
    parallel_for(static_cast<Eigen::Index>(indices.size()), [&](std::ptrdiff_t k) {
      Eigen::Index i = indices[static_cast<std::size_t>(k)];
      try {
        q.col(i) = map->evaluate(m.col(i));
        ok[static_cast<std::size_t>(i)] = 1;
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw;
        ok[static_cast<std::size_t>(i)] = 0;
      }
    });
  };

  std::vector<Eigen::Index> all(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < total; ++i) all[static_cast<std::size_t>(i)] = i;
  evaluate_block(all);

  // Replace failed samples with fresh draws, in index order, up to the cap.
  int retries = 0;
  while (true) {
    std::vector<Eigen::Index> failed;
    for (Eigen::Index i = 0; i < total; ++i)
      if (!ok[static_cast<std::size_t>(i)]) failed.push_back(i);
    if (failed.empty()) break;
    require_numerical(retries + static_cast<int>(failed.size()) <=
                          config.data.retry_cap,
                      "generate-data: " + std::to_string(failed.size()) +
                          " samples still failing after " +
                          std::to_string(retries) + " replacement draws");
    for (Eigen::Index i : failed) {
      std::cerr << "warning: generate-data: sample " << i
                << " failed; drawing a replacement\n";
      m.col(i) = root.sample(1, rng);
      ++retries;
    }
    evaluate_block(failed);
  }

  const Eigen::Index n_test = config.data.test;
  const Eigen::Index n_pool = total - n_test;
  save_matrix_once(paths.data("m_train.rla"), m.leftCols(n_pool));
  save_matrix_once(paths.data("q_train.rla"), q.leftCols(n_pool));
  save_matrix_once(paths.data("m_test.rla"), m.rightCols(n_test));
  save_matrix_once(paths.data("q_test.rla"), q.rightCols(n_test));

  json meta;
  meta["config_hash"] = paths.data_hash;
  meta["total"] = total;
  meta["train_pool"] = n_pool;
  meta["test"] = n_test;
  meta["replaced"] = retries;
  write_json_file(paths.data("meta.json"), meta);
}

void cmd_compute_basis(const ExperimentConfig& config, const std::string& kind) {
  if (kind == "all") {
    // Every mode needs POD for the output layer; the projection diagnostic
    // needs AS and KLE regardless of the train mode list.
    cmd_compute_basis(config, "pod");
    cmd_compute_basis(config, "as");
    cmd_compute_basis(config, "kle");
    return;
  }

  ArtifactPaths paths(config);
  if (fs::exists(paths.basis(kind, "meta.json"))) {
    std::cerr << "compute-basis: reusing " << paths.basis(kind, "meta.json")
              << "\n";
    return;
  }

  const Eigen::Index r_max =
      std::min(config.max_rank(), std::min(config.input_dim(), config.output_dim()));

  if (kind == "as") {
    auto map = config.make_map();
    field::PrecisionRoot root = field::PrecisionRoot::build(config.field_config());
    Rng rng = Rng(config.seed).child(Streams::kAs);
    Eigen::Index failures = 0;
    Eigen::Index p = std::min(config.bases.oversampling,
                              config.input_dim() - r_max);
    ReducedBasis basis = subspaces::active_subspace(
        *map, root, config.bases.as_samples, r_max, p, rng, &failures);
    if (failures > 0)
      std::cerr << "warning: compute-basis as: " << failures
                << " samples failed and were excluded\n";
    save_basis(paths, kind, basis, nullptr, false);
  } else if (kind == "kle") {
    field::PrecisionRoot root = field::PrecisionRoot::build(config.field_config());
    Rng rng = Rng(config.seed).child(Streams::kKle);
    ReducedBasis basis = field::kle(root, r_max, rng);
    save_basis(paths, kind, basis, nullptr, false);
  } else if (kind == "pod") {
    DataSet data = load_data(paths);
    require_config(config.bases.pod_samples <= data.q_train.cols(),
                   "compute-basis pod: pod_samples exceeds the training pool");
    subspaces::PodResult result =
        subspaces::pod(data.q_train.leftCols(config.bases.pod_samples), r_max);
    if (result.truncated)
      std::cerr << "warning: compute-basis pod: snapshot rank "
                << result.basis.rank() << " is below the requested rank "
                << r_max << "\n";
    save_basis(paths, kind, result.basis, &result.mean, result.truncated);
  } else if (kind == "random") {
    Rng rng = Rng(config.seed)
                  .child(Streams::kRandomBasis)
                  .child(train_seed_of(config, 0));
    ReducedBasis basis = subspaces::random_basis(config.input_dim(), r_max, rng);
    save_basis(paths, kind, basis, nullptr, false);
  } else {
    throw_config("compute-basis: unknown kind '" + kind +
                 "' (expected as|kle|pod|random|all)");
  }
}

void cmd_train(const ExperimentConfig& config, const CellFilter& filter) {
  ArtifactPaths paths(config);
  DataSet data = load_data(paths);

  for (const CellKey& cell : expand_cells(config, filter)) {
    const std::string meta_path = paths.cell(paths.runs_dir, cell.mode, cell.rank,
                                             cell.n_train, cell.seed_index,
                                             "meta.json");
    if (fs::exists(meta_path)) {
      std::cerr << "train: reusing " << meta_path << "\n";
      continue;
    }
    require_config(cell.n_train <= data.m_train.cols(),
                   "train: n_train exceeds the stored training pool");

    surrogate::NetworkSpec spec = build_spec(config, paths, cell);
    surrogate::TrainConfig tc = train_config_of(config, cell.seed_index);

    const auto start = std::chrono::steady_clock::now();
    surrogate::TrainResult result =
        surrogate::train(spec, tc, data.m_train.leftCols(cell.n_train),
                         data.q_train.leftCols(cell.n_train));
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();

    save_matrix_once(paths.cell(paths.runs_dir, cell.mode, cell.rank,
                                cell.n_train, cell.seed_index, "weights.rla"),
                     result.weights);

    std::ostringstream history;
    history << "epoch,loss,wall_time_s\n";
    for (const surrogate::EpochRecord& rec : result.history)
      history << rec.epoch << ',' << fmt(rec.loss) << ',' << fmt(rec.wall_time_s)
              << '\n';
    write_text(paths.cell(paths.runs_dir, cell.mode, cell.rank, cell.n_train,
                          cell.seed_index, "history.csv"),
               history.str());

    json meta;
    meta["config_hash"] = paths.hash;
    meta["mode"] = cell.mode;
    meta["rank"] = cell.rank;
    meta["n_train"] = cell.n_train;
    meta["seed_index"] = cell.seed_index;
    meta["train_seed"] = tc.seed;
    meta["d_w"] = spec.d_w();
    meta["epochs_run"] = result.history.size();
    meta["diverged"] = result.diverged;
    meta["final_loss"] =
        result.history.empty() ? -1.0 : result.history.back().loss;
    meta["wall_time_s"] = wall;
    write_json_file(meta_path, meta);
  }
}

void cmd_evaluate(const ExperimentConfig& config, const CellFilter& filter) {
  ArtifactPaths paths(config);
  DataSet data = load_data(paths);

  for (const CellKey& cell : expand_cells(config, filter)) {
    const std::string metrics_path =
        paths.cell(paths.metrics_dir, cell.mode, cell.rank, cell.n_train,
                   cell.seed_index, "json");
    if (fs::exists(metrics_path)) {
      std::cerr << "evaluate: reusing " << metrics_path << "\n";
      continue;
    }
    const std::string run_meta_path =
        paths.cell(paths.runs_dir, cell.mode, cell.rank, cell.n_train,
                   cell.seed_index, "meta.json");
    require_config(fs::exists(run_meta_path),
                   "evaluate: run not found (train first): " + run_meta_path);
    json run_meta = read_json_file(run_meta_path);

    surrogate::NetworkSpec spec = build_spec(config, paths, cell);
    Eigen::VectorXd weights = array_store::load_matrix(
        paths.cell(paths.runs_dir, cell.mode, cell.rank, cell.n_train,
                   cell.seed_index, "weights.rla"));
    surrogate::Accuracy acc =
        surrogate::evaluate_accuracy(spec, weights, data.m_test, data.q_test);

    json row;
    row["config_hash"] = paths.hash;
    row["mode"] = cell.mode;
    row["rank"] = cell.rank;
    row["n_train"] = cell.n_train;
    row["seed_index"] = cell.seed_index;
    row["train_seed"] = run_meta.at("train_seed");
    row["relative_error"] = acc.relative_error;
    row["accuracy"] = acc.accuracy;
    row["d_w"] = run_meta.at("d_w");
    row["wall_time_s"] = run_meta.at("wall_time_s");
    row["diverged"] = run_meta.at("diverged");
    write_json_file(metrics_path, row);
  }
}

namespace {

json projection_rows(const ExperimentConfig& config, const ArtifactPaths& paths) {
  auto map = config.make_map();
  DataSet data = load_data(paths);
  Eigen::MatrixXd m_test = data.m_test.leftCols(
      std::min<Eigen::Index>(config.diagnostics.projection_samples,
                             data.m_test.cols()));
  Eigen::MatrixXd q_test = data.q_test.leftCols(m_test.cols());

  ReducedBasis pod_basis = load_basis(paths, "pod");
  json rows = json::array();
  for (const std::string& input_kind : {std::string("as"), std::string("kle")}) {
    ReducedBasis input_full = load_basis(paths, input_kind);
    for (Eigen::Index rank : config.diagnostics.projection_ranks) {
      require_config(rank <= input_full.rank() && rank <= pod_basis.rank(),
                     "project-error: rank exceeds a stored basis rank");
      subspaces::RidgeProjectors projectors;
      projectors.input = slice(input_full, rank);
      projectors.output = slice(pod_basis, rank);
      subspaces::ProjectionErrorResult result =
          subspaces::projection_error(*map, m_test, q_test, projectors);
      json row;
      row["config_hash"] = paths.hash;
      row["input"] = input_kind;
      row["rank"] = rank;
      row["mean"] = result.mean;
      row["standard_error"] = result.standard_error;
      row["n_used"] = result.n_used;
      row["n_failed"] = result.n_failed;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace

void cmd_project_error(const ExperimentConfig& config) {
  ArtifactPaths paths(config);
  const std::string json_path = paths.diagnostic("projection_error.json");
  if (fs::exists(json_path)) {
    std::cerr << "project-error: reusing " << json_path << "\n";
    return;
  }
  json rows = projection_rows(config, paths);
  write_json_file(json_path, rows);

  std::ostringstream csv;
  csv << "config_hash,input,rank,mean,standard_error,n_used,n_failed\n";
  for (const json& row : rows)
    csv << row.at("config_hash").get<std::string>() << ','
        << row.at("input").get<std::string>() << ',' << row.at("rank").get<long>()
        << ',' << fmt(row.at("mean").get<double>()) << ','
        << fmt(row.at("standard_error").get<double>()) << ','
        << row.at("n_used").get<long>() << ',' << row.at("n_failed").get<long>()
        << '\n';
  write_text(paths.diagnostic("projection_error.csv"), csv.str());
}

void cmd_bound_check(const ExperimentConfig& config) {
  ArtifactPaths paths(config);
  const std::string json_path = paths.diagnostic("bound_check.json");
  if (fs::exists(json_path)) {
    std::cerr << "bound-check: reusing " << json_path << "\n";
    return;
  }
  auto map = config.make_map();
  field::PrecisionRoot root = field::PrecisionRoot::build(config.field_config());
  Rng rng = Rng(config.seed).child(Streams::kBound);
  subspaces::BoundCheckReport report = subspaces::bound_check(
      *map, root, config.diagnostics.bound_r_m, config.diagnostics.bound_r_q,
      config.bases.as_samples, config.bases.pod_samples,
      config.diagnostics.bound_n_outer, config.diagnostics.bound_n_inner, rng);

  json row;
  row["config_hash"] = paths.hash;
  row["r_m"] = config.diagnostics.bound_r_m;
  row["r_q"] = config.diagnostics.bound_r_q;
  row["n_outer"] = report.n_outer;
  row["n_inner"] = report.n_inner;
  row["lhs"] = report.lhs;
  row["lhs_se"] = report.lhs_se;
  row["rhs"] = report.rhs;
  row["rhs_se"] = report.rhs_se;
  row["combined_se"] = report.combined_se;
  row["margin"] = report.margin;
  row["pass"] = report.pass;
  write_json_file(json_path, row);

  std::ostringstream csv;
  csv << "config_hash,r_m,r_q,n_outer,n_inner,lhs,lhs_se,rhs,rhs_se,"
         "combined_se,margin,pass\n";
  csv << paths.hash << ',' << config.diagnostics.bound_r_m << ','
      << config.diagnostics.bound_r_q << ',' << report.n_outer << ','
      << report.n_inner << ',' << fmt(report.lhs) << ',' << fmt(report.lhs_se)
      << ',' << fmt(report.rhs) << ',' << fmt(report.rhs_se) << ','
      << fmt(report.combined_se) << ',' << fmt(report.margin) << ','
      << (report.pass ? "true" : "false") << '\n';
  write_text(paths.diagnostic("bound_check.csv"), csv.str());
}

void cmd_report(const ExperimentConfig& config) {
  ArtifactPaths paths(config);

  json accuracy_table = json::array();
  json gaps = json::array();
  std::ostringstream csv;
  csv << "config_hash,mode,rank,n_train,n_seeds,mean_accuracy,std_accuracy,"
         "mean_relative_error,std_relative_error,d_w,mean_wall_time_s\n";

  std::size_t rows_found = 0;
  for (const std::string& mode : config.train.modes) {
    for (Eigen::Index rank : config.bases.ranks) {
      for (Eigen::Index n : config.train.n_train) {
        std::vector<double> accuracies, errors, walls;
        long d_w = -1;
        json missing = json::array();
        for (int s = 0; s < config.train.seeds; ++s) {
          const std::string metrics_path =
              paths.cell(paths.metrics_dir, mode, rank, n, s, "json");
          if (!fs::exists(metrics_path)) {
            missing.push_back(s);
            continue;
          }
          json row = read_json_file(metrics_path);
          accuracies.push_back(row.at("accuracy").get<double>());
          errors.push_back(row.at("relative_error").get<double>());
          walls.push_back(row.at("wall_time_s").get<double>());
          d_w = row.at("d_w").get<long>();
        }
        rows_found += accuracies.size();

        auto mean_of = [](const std::vector<double>& v) {
          double s = 0.0;
          for (double x : v) s += x;
          return s / static_cast<double>(v.size());
        };
        auto std_of = [&](const std::vector<double>& v, double mean) {
          if (v.size() < 2) return 0.0;  // single-seed cell → std 0
          double ss = 0.0;
          for (double x : v) ss += (x - mean) * (x - mean);
          return std::sqrt(ss / static_cast<double>(v.size() - 1));
        };

        if (!missing.empty()) {
          json gap;
          gap["mode"] = mode;
          gap["rank"] = rank;
          gap["n_train"] = n;
          gap["missing_seed_indices"] = missing;
          gaps.push_back(gap);
        }
        if (accuracies.empty()) {
          csv << paths.hash << ',' << mode << ',' << rank << ',' << n
              << ",0,,,,,,\n";
          continue;
        }

        double mean_acc = mean_of(accuracies);
        double mean_err = mean_of(errors);
        json row;
        row["config_hash"] = paths.hash;
        row["mode"] = mode;
        row["rank"] = rank;
        row["n_train"] = n;
        row["n_seeds"] = accuracies.size();
        row["mean_accuracy"] = mean_acc;
        row["std_accuracy"] = std_of(accuracies, mean_acc);
        row["mean_relative_error"] = mean_err;
        row["std_relative_error"] = std_of(errors, mean_err);
        row["d_w"] = d_w;
        accuracy_table.push_back(row);

        csv << paths.hash << ',' << mode << ',' << rank << ',' << n << ','
            << accuracies.size() << ',' << fmt(mean_acc) << ','
            << fmt(std_of(accuracies, mean_acc)) << ',' << fmt(mean_err) << ','
            << fmt(std_of(errors, mean_err)) << ',' << d_w << ','
            << fmt(mean_of(walls)) << '\n';
      }
    }
  }

  json report;
  report["version"] = 1;
  report["config_hash"] = paths.hash;
  report["accuracy_table"] = accuracy_table;
  report["gaps"] = gaps;
  if (rows_found == 0) report["note"] = "no data";

  const std::string projection_path = paths.diagnostic("projection_error.json");
  report["projection_error"] =
      fs::exists(projection_path) ? read_json_file(projection_path) : json();
  const std::string bound_path = paths.diagnostic("bound_check.json");
  report["bound_check"] =
      fs::exists(bound_path) ? read_json_file(bound_path) : json();

  // report.json is the determinism contract: identical config + seeds must
  // reproduce it byte for byte, so wall times never enter it.
  write_text(paths.report("report.json"), report.dump(2) + "\n");
  write_text(paths.report("report_accuracy.csv"), csv.str());
}

void cmd_run_all(const ExperimentConfig& config) {
  cmd_generate_data(config);
  cmd_compute_basis(config, "all");
  CellFilter all;
  cmd_train(config, all);
  cmd_evaluate(config, all);
  cmd_report(config);
}

}  // namespace ridgeline::cli
