#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <vector>

namespace ridgeline {

/// Deterministic random number generator with explicit child streams.
///
/// Wraps std::mt19937_64 (whose raw output sequence is pinned by the
/// standard) and derives uniform/normal variates from raw 64-bit draws, so
/// every stream is bit-reproducible across platforms and standard-library
/// implementations.  Child streams are derived from the *seed*, not the
/// engine state, so per-sample streams are stable regardless of how much
/// the parent has been consumed (and safe to hand to parallel workers).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Raw 64-bit draw from the underlying engine.
  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box–Muller (two variates per transform, cached).
  double normal();

  Eigen::VectorXd uniform_vector(Eigen::Index n, double lo, double hi);
  Eigen::VectorXd normal_vector(Eigen::Index n);
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

  /// Fisher–Yates shuffle of 0..n-1, used for minibatch permutations.
  std::vector<Eigen::Index> permutation(Eigen::Index n);

  /// Independent stream keyed by (seed, stream_id); deterministic and
  /// independent of this generator's draw position.
  [[nodiscard]] Rng child(std::uint64_t stream_id) const;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  /// SplitMix64 output function; used for seed mixing and config hashing.
  static std::uint64_t splitmix64(std::uint64_t& state);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace ridgeline
