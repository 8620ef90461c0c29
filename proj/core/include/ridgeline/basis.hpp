#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>

namespace ridgeline {

enum class BasisKind {
  AS,
  KLE,
  POD,
  RandomInput,
  RandomOutput,
};

enum class BasisOrthogonality {
  Identity,      // VᵀV = I
  WeightedCinv,  // VᵀC⁻¹V = I
};

/// Rank-r reduced basis with its eigenvalue estimates and provenance.
/// Produced by gaussianfield::kle and the subspaces module; consumed by the
/// surrogate and the CLI.
struct ReducedBasis {
  Eigen::MatrixXd matrix;       // d×r
  Eigen::VectorXd eigenvalues;  // length r, non-negative, descending
  BasisKind kind = BasisKind::RandomInput;
  BasisOrthogonality orthogonality = BasisOrthogonality::Identity;
  std::uint64_t seed = 0;          // provenance
  Eigen::Index sample_count = 0;   // provenance; 0 when not sample-based

  [[nodiscard]] Eigen::Index dim() const { return matrix.rows(); }
  [[nodiscard]] Eigen::Index rank() const { return matrix.cols(); }
};

inline std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::AS: return "as";
    case BasisKind::KLE: return "kle";
    case BasisKind::POD: return "pod";
    case BasisKind::RandomInput: return "random_input";
    case BasisKind::RandomOutput: return "random_output";
  }
  return "unknown";
}

inline std::string to_string(BasisOrthogonality o) {
  return o == BasisOrthogonality::Identity ? "identity" : "weighted_cinv";
}

}  // namespace ridgeline
