#pragma once

/// Experiment configuration: a versioned JSON key/value tree with CLI-flag
/// overrides.  Precedence: built-in defaults < config file < command-line
/// flags.  Unknown keys are config errors so typos fail loudly.
///
/// Every artifact file is named by the config hash (FNV-1a over the
/// canonical JSON form, excluding the output directory), so re-runs reuse
/// files write-once and concurrent cells never collide.

#include "ridgeline/gaussianfield.hpp"
#include "ridgeline/parametricmap.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ridgeline::cli {

struct MapSection {
  std::string kind = "crd";  // crd | linear | oscillatory
  // crd parameters (grid is shared with the field):
  Eigen::Index nx = 32, ny = 32;
  double k_diff = 0.1;
  double v0 = 1.0;
  double obs_lo = 0.6, obs_hi = 0.8;
  Eigen::Index obs_nx = 7, obs_ny = 7;
  // synthetic map parameters:
  Eigen::Index d_q = 49;
  double scale = 1.0;   // linear map gain
  double omega = 1.0;   // oscillatory frequency
};

struct FieldSection {
  double gamma = 0.1;
  double delta = 1.0;
  double theta_x = 1.0, theta_y = 1.0;
};

struct DataSection {
  Eigen::Index total = 2048;
  Eigen::Index test = 512;
  int retry_cap = 20;  // replacement draws allowed across the whole set
};

struct BasesSection {
  Eigen::Index as_samples = 256;
  Eigen::Index pod_samples = 400;
  std::vector<Eigen::Index> ranks = {8, 32, 64, 128};
  Eigen::Index oversampling = 10;  // for the randomized AS eigensolver
  bool rescale = false;           // eigenvalue-rescaled input bases
};

struct TrainSection {
  std::vector<std::string> modes = {"as", "kle", "rs", "fs"};
  std::vector<Eigen::Index> n_train = {64, 128, 256, 512};
  int seeds = 10;
  std::uint64_t base_seed = 0;  // seed_index s trains with base_seed + s
  std::string optimizer = "adam";
  int epochs = 2000;
  double adam_step = 1e-3;
  double adam_beta1 = 0.9, adam_beta2 = 0.999;
  double lm_damping = 1e-3;
  double cg_tolerance = 1e-2;
  int cg_max_iters = 50;
};

struct DiagnosticsSection {
  Eigen::Index projection_samples = 256;
  std::vector<Eigen::Index> projection_ranks;  // empty → bases.ranks
  Eigen::Index bound_r_m = 8, bound_r_q = 8;
  Eigen::Index bound_n_outer = 64, bound_n_inner = 256;
};

struct ExperimentConfig {
  int version = 1;
  std::uint64_t seed = 1234;  // master seed; all streams derive from it
  std::string out = "runs/default";
  MapSection map;
  FieldSection field;
  DataSection data;
  BasesSection bases;
  TrainSection train;
  DiagnosticsSection diagnostics;

  /// Parses the JSON file and applies it over the defaults.
  static ExperimentConfig load(const std::string& path);

  /// Parses a JSON string (used by load and by tests).
  static ExperimentConfig from_json_text(const std::string& text);

  /// Which config sections determine an artifact's content.  Data files are
  /// keyed by {seed, map, field, data}; bases add {bases}; everything else
  /// (runs, metrics, diagnostics, report) is keyed by the full config minus
  /// `out`.  Sweeping train settings therefore reuses data and bases.
  enum class HashScope { Data, Bases, Full };

  /// Canonical JSON form (sorted keys, no whitespace), excluding `out`.
  [[nodiscard]] std::string canonical_json(HashScope scope = HashScope::Full) const;

  /// 16-hex-digit FNV-1a hash of canonical_json(); stamped on every row.
  [[nodiscard]] std::string hash(HashScope scope = HashScope::Full) const;

  /// Validates ranges and cross-field invariants (throws config errors);
  /// clamps ranks above min(d_M, d_Q) with a warning on stderr.
  void validate_and_clamp();

  [[nodiscard]] field::FieldConfig field_config() const;
  [[nodiscard]] std::unique_ptr<maps::Map> make_map() const;

  [[nodiscard]] Eigen::Index input_dim() const;
  [[nodiscard]] Eigen::Index output_dim() const;
  [[nodiscard]] Eigen::Index max_rank() const;
};

/// FNV-1a 64-bit over a byte string (also used to stamp metrics rows).
std::uint64_t fnv1a(const std::string& bytes);

/// Derived random streams (documented so runs are auditable):
///   data draws      master.child(0xDA7A)
///   AS basis        master.child(0xA5)
///   KLE basis       master.child(0x1CE)
///   random basis    master.child(0xB5).child(train_seed)
///   bound check     master.child(0xB0)
///   training init   base_seed + seed_index (weights; see surrogate)
struct Streams {
  static constexpr std::uint64_t kData = 0xDA7A;
  static constexpr std::uint64_t kAs = 0xA5;
  static constexpr std::uint64_t kKle = 0x1CE;
  static constexpr std::uint64_t kRandomBasis = 0xB5;
  static constexpr std::uint64_t kBound = 0xB0;
  static constexpr std::uint64_t kSyntheticMap = 0x11EA;
};

}  // namespace ridgeline::cli
