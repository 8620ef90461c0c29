#include "ridgeline_cli/experiment.hpp"

#include "ridgeline/errors.hpp"
#include "ridgeline/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <utility>

namespace ridgeline::cli {

using nlohmann::json;

namespace {

/// Applies `src` over the struct fields, rejecting unknown keys.
class Section {
 public:
  Section(json src, std::string name)
      : src_(std::move(src)), name_(std::move(name)) {
    require_config(src_.is_object(), "config: '" + name_ + "' must be an object");
    for (const auto& item : src_.items()) pending_.insert(item.key());
  }

  template <typename T>
  void get(const char* key, T& into) {
    if (!src_.contains(key)) return;
    pending_.erase(key);
    try {
      into = src_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw_config("config: bad value for '" + name_ + "." + key + "': " + e.what());
    }
  }

  json sub(const char* key) {
    pending_.erase(key);
    return src_.contains(key) ? src_.at(key) : json::object();
  }

  ~Section() noexcept(false) {
    if (!pending_.empty() && !std::uncaught_exceptions())
      throw_config("config: unknown key '" + name_ + "." + *pending_.begin() + "'");
  }

 private:
  json src_;
  std::string name_;
  std::set<std::string> pending_;
};

void apply_tree(const json& j, ExperimentConfig& c) {
  Section root(j, "");
  root.get("version", c.version);
  require_config(c.version == 1, "config: unsupported version (expected 1)");
  root.get("seed", c.seed);
  root.get("out", c.out);
  {
    Section s(root.sub("map"), "map");
    s.get("kind", c.map.kind);
    s.get("nx", c.map.nx);
    s.get("ny", c.map.ny);
    s.get("k_diff", c.map.k_diff);
    s.get("v0", c.map.v0);
    s.get("obs_lo", c.map.obs_lo);
    s.get("obs_hi", c.map.obs_hi);
    s.get("obs_nx", c.map.obs_nx);
    s.get("obs_ny", c.map.obs_ny);
    s.get("d_q", c.map.d_q);
    s.get("scale", c.map.scale);
    s.get("omega", c.map.omega);
  }
  {
    Section s(root.sub("field"), "field");
    s.get("gamma", c.field.gamma);
    s.get("delta", c.field.delta);
    s.get("theta_x", c.field.theta_x);
    s.get("theta_y", c.field.theta_y);
  }
  {
    Section s(root.sub("data"), "data");
    s.get("total", c.data.total);
    s.get("test", c.data.test);
    s.get("retry_cap", c.data.retry_cap);
  }
  {
    Section s(root.sub("bases"), "bases");
    s.get("as_samples", c.bases.as_samples);
    s.get("pod_samples", c.bases.pod_samples);
    s.get("ranks", c.bases.ranks);
    s.get("oversampling", c.bases.oversampling);
    s.get("rescale", c.bases.rescale);
  }
  {
    Section s(root.sub("train"), "train");
    s.get("modes", c.train.modes);
    s.get("n_train", c.train.n_train);
    s.get("seeds", c.train.seeds);
    s.get("base_seed", c.train.base_seed);
    s.get("optimizer", c.train.optimizer);
    s.get("epochs", c.train.epochs);
    s.get("adam_step", c.train.adam_step);
    s.get("adam_beta1", c.train.adam_beta1);
    s.get("adam_beta2", c.train.adam_beta2);
    s.get("lm_damping", c.train.lm_damping);
    s.get("cg_tolerance", c.train.cg_tolerance);
    s.get("cg_max_iters", c.train.cg_max_iters);
  }
  {
    Section s(root.sub("diagnostics"), "diagnostics");
    s.get("projection_samples", c.diagnostics.projection_samples);
    s.get("projection_ranks", c.diagnostics.projection_ranks);
    s.get("bound_r_m", c.diagnostics.bound_r_m);
    s.get("bound_r_q", c.diagnostics.bound_r_q);
    s.get("bound_n_outer", c.diagnostics.bound_n_outer);
    s.get("bound_n_inner", c.diagnostics.bound_n_inner);
  }
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["version"] = c.version;
  j["seed"] = c.seed;
  j["map"] = {{"kind", c.map.kind},     {"nx", c.map.nx},
              {"ny", c.map.ny},         {"k_diff", c.map.k_diff},
              {"v0", c.map.v0},         {"obs_lo", c.map.obs_lo},
              {"obs_hi", c.map.obs_hi}, {"obs_nx", c.map.obs_nx},
              {"obs_ny", c.map.obs_ny}, {"d_q", c.map.d_q},
              {"scale", c.map.scale},   {"omega", c.map.omega}};
  j["field"] = {{"gamma", c.field.gamma},
                {"delta", c.field.delta},
                {"theta_x", c.field.theta_x},
                {"theta_y", c.field.theta_y}};
  j["data"] = {{"total", c.data.total},
               {"test", c.data.test},
               {"retry_cap", c.data.retry_cap}};
  j["bases"] = {{"as_samples", c.bases.as_samples},
                {"pod_samples", c.bases.pod_samples},
                {"ranks", c.bases.ranks},
                {"oversampling", c.bases.oversampling},
                {"rescale", c.bases.rescale}};
  j["train"] = {{"modes", c.train.modes},
                {"n_train", c.train.n_train},
                {"seeds", c.train.seeds},
                {"base_seed", c.train.base_seed},
                {"optimizer", c.train.optimizer},
                {"epochs", c.train.epochs},
                {"adam_step", c.train.adam_step},
                {"adam_beta1", c.train.adam_beta1},
                {"adam_beta2", c.train.adam_beta2},
                {"lm_damping", c.train.lm_damping},
                {"cg_tolerance", c.train.cg_tolerance},
                {"cg_max_iters", c.train.cg_max_iters}};
  j["diagnostics"] = {{"projection_samples", c.diagnostics.projection_samples},
                      {"projection_ranks", c.diagnostics.projection_ranks},
                      {"bound_r_m", c.diagnostics.bound_r_m},
                      {"bound_r_q", c.diagnostics.bound_r_q},
                      {"bound_n_outer", c.diagnostics.bound_n_outer},
                      {"bound_n_inner", c.diagnostics.bound_n_inner}};
  return j;
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  require_config(in.good(), "config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw_config(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig config;
  apply_tree(j, config);
  return config;
}

std::string ExperimentConfig::canonical_json(HashScope scope) const {
  json j = to_json(*this);  // nlohmann objects iterate in sorted key order
  // The stored decomposition depth is max_rank() capped by the dimensions,
  // which the diagnostic ranks can raise.  It enters the bases object
  // explicitly so configs that alias the bases section but need different
  // depths never share basis files.
  j["bases"]["computed_rank"] =
      std::min(max_rank(), std::min(input_dim(), output_dim()));
  if (scope == HashScope::Data || scope == HashScope::Bases) {
    j.erase("train");
    j.erase("diagnostics");
    if (scope == HashScope::Data) j.erase("bases");
  }
  return j.dump();
}

std::string ExperimentConfig::hash(HashScope scope) const {
  std::uint64_t h = fnv1a(canonical_json(scope));
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buffer);
}

void ExperimentConfig::validate_and_clamp() {
  require_config(map.kind == "crd" || map.kind == "linear" ||
                     map.kind == "oscillatory",
                 "config: map.kind must be crd|linear|oscillatory");
  require_config(map.nx >= 2 && map.ny >= 2, "config: grid must be at least 2x2");
  require_config(data.total >= 1 && data.test >= 1 && data.test < data.total,
                 "config: need 1 <= test < total");
  require_config(data.retry_cap >= 0, "config: retry_cap must be >= 0");
  require_config(!bases.ranks.empty(), "config: bases.ranks must be non-empty");
  require_config(bases.as_samples >= 1 && bases.pod_samples >= 1,
                 "config: basis sample counts must be >= 1");
  require_config(bases.pod_samples <= data.total - data.test,
                 "config: pod_samples exceeds the training pool");
  require_config(bases.oversampling >= 2, "config: oversampling must be >= 2");
  require_config(train.seeds >= 1, "config: train.seeds must be >= 1");
  require_config(train.epochs >= 0, "config: train.epochs must be >= 0");
  require_config(train.optimizer == "adam" || train.optimizer == "newtoncg",
                 "config: train.optimizer must be adam|newtoncg");
  for (const std::string& mode : train.modes)
    require_config(mode == "as" || mode == "kle" || mode == "rs" || mode == "fs",
                   "config: train.modes entries must be as|kle|rs|fs");
  for (Eigen::Index n : train.n_train) {
    require_config(n >= 1, "config: n_train entries must be >= 1");
    require_config(n + data.test <= data.total,
                   "config: n_train + test exceeds total data");
  }

  const Eigen::Index cap = std::min(input_dim(), output_dim());
  auto clamp_ranks = [cap](std::vector<Eigen::Index>& ranks, const char* where) {
    for (Eigen::Index& r : ranks) {
      require_config(r >= 1, std::string("config: ") + where + " ranks must be >= 1");
      if (r > cap) {
        std::cerr << "warning: clamping " << where << " rank " << r << " to "
                  << cap << " (min of input/output dims)\n";
        r = cap;
      }
    }
  };
  clamp_ranks(bases.ranks, "bases");
  if (diagnostics.projection_ranks.empty())
    diagnostics.projection_ranks = bases.ranks;
  else
    clamp_ranks(diagnostics.projection_ranks, "diagnostics");
  require_config(diagnostics.projection_samples >= 1,
                 "config: projection_samples must be >= 1");
  require_config(diagnostics.bound_r_m >= 1 && diagnostics.bound_r_q >= 1,
                 "config: bound ranks must be >= 1");
  require_config(diagnostics.bound_n_outer >= 2 && diagnostics.bound_n_inner >= 1,
                 "config: need bound_n_outer >= 2 and bound_n_inner >= 1");
}

field::FieldConfig ExperimentConfig::field_config() const {
  field::FieldConfig fc;
  fc.nx = map.nx;
  fc.ny = map.ny;
  fc.gamma = field.gamma;
  fc.delta = field.delta;
  fc.theta_x = field.theta_x;
  fc.theta_y = field.theta_y;
  return fc;
}

std::unique_ptr<maps::Map> ExperimentConfig::make_map() const {
  const Eigen::Index d_m = input_dim();
  if (map.kind == "crd") {
    maps::CrdConfig mc;
    mc.nx = map.nx;
    mc.ny = map.ny;
    mc.k_diff = map.k_diff;
    mc.v0 = map.v0;
    mc.obs_lo = map.obs_lo;
    mc.obs_hi = map.obs_hi;
    mc.obs_nx = map.obs_nx;
    mc.obs_ny = map.obs_ny;
    return std::make_unique<maps::CrdMap>(mc);
  }
  Rng rng = Rng(seed).child(Streams::kSyntheticMap);
  if (map.kind == "linear") {
    Eigen::MatrixXd g = rng.normal_matrix(map.d_q, d_m) *
                        (map.scale / std::sqrt(static_cast<double>(d_m)));
    return std::make_unique<maps::LinearMap>(std::move(g));
  }
  require_config(map.kind == "oscillatory",
                 "config: map.kind must be crd|linear|oscillatory");
  Eigen::MatrixXd b_out = rng.normal_matrix(map.d_q, map.d_q);
  Eigen::MatrixXd w = rng.normal_matrix(map.d_q, d_m) *
                      (map.scale / std::sqrt(static_cast<double>(d_m)));
  return std::make_unique<maps::OscillatoryMap>(std::move(b_out), std::move(w),
                                                map.omega);
}

Eigen::Index ExperimentConfig::input_dim() const {
  return (map.nx + 1) * (map.ny + 1);
}

Eigen::Index ExperimentConfig::output_dim() const {
  return map.kind == "crd" ? map.obs_nx * map.obs_ny : map.d_q;
}

Eigen::Index ExperimentConfig::max_rank() const {
  Eigen::Index r = 1;
  for (Eigen::Index rank : bases.ranks) r = std::max(r, rank);
  for (Eigen::Index rank : diagnostics.projection_ranks) r = std::max(r, rank);
  return r;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace ridgeline::cli
