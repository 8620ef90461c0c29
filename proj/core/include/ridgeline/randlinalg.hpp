#pragma once

#include "ridgeline/rng.hpp"

#include <Eigen/Core>

#include <functional>

namespace ridgeline::randlinalg {

/// Matrix-free symmetric linear operator.  `apply` maps a dim×b block of
/// column vectors to the dim×b block of images; implementations must be
/// symmetric (⟨Ax, y⟩ = ⟨x, Ay⟩) but this is only spot-checked by tests,
/// not enforced per call.
struct SymmetricOperator {
  Eigen::Index dim = 0;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> apply;

  [[nodiscard]] Eigen::MatrixXd operator()(const Eigen::MatrixXd& x) const;

  /// Wraps an explicit dense symmetric matrix.
  static SymmetricOperator from_matrix(const Eigen::MatrixXd& a);
};

enum class Orthogonality {
  Identity,   // VᵀV = I
  WeightedCinv,  // VᵀC⁻¹V = I
};

struct EigResult {
  Eigen::VectorXd eigenvalues;  // length k, non-increasing
  Eigen::MatrixXd vectors;      // dim×k
  Orthogonality orthogonality = Orthogonality::Identity;
};

/// Dense symmetric eigendecomposition by cyclic Jacobi rotations; returns all
/// eigenpairs sorted by descending eigenvalue.  `tol` bounds the final
/// off-diagonal Frobenius norm relative to the input's Frobenius norm.
EigResult jacobi_eigh(const Eigen::MatrixXd& a, double tol = 1e-14);

/// Randomized range-restricted eigendecomposition of a symmetric operator.
///
/// passes=1 is the single-pass variant: with Ω the Gaussian probe block and
/// Y = AΩ, Q = qr(Y), the projected matrix solves B (QᵀΩ) = QᵀY in least
/// squares and is symmetrized.  passes=2 performs one power iteration with
/// re-orthonormalization (Q₁ = qr(AΩ), Q = qr(AQ₁)) followed by an exact
/// Rayleigh–Ritz projection B = QᵀAQ; three operator block-applications
/// total.  Probe entries are standard normal, generated column-major from
/// the seeded generator.
EigResult randomized_eigh(const SymmetricOperator& op, Eigen::Index k,
                          Eigen::Index p, int passes, Rng& rng);

/// Solves the generalized problem H v = λ C⁻¹ v through the similarity
/// S = C^{1/2} H C^{1/2}: randomized_eigh(S) gives (λ, u) and v = C^{1/2}u.
/// The result is tagged WeightedCinv with VᵀC⁻¹V = I; deviations beyond
/// 1e-6 raise a numerical error.
EigResult generalized_eigh_via_transform(const SymmetricOperator& h,
                                         const SymmetricOperator& c_sqrt,
                                         const SymmetricOperator& c_inv,
                                         Eigen::Index k, Eigen::Index p,
                                         Rng& rng, int passes = 2);

struct AdaptiveRankResult {
  Eigen::Index rank = 0;
  bool satisfied = false;  // false when even the full length fails the bound
};

/// Smallest k such that (1 + 4·√(n(k+p))/(p−1))·|d_{k+1}| ≤ tol, where d is
/// the vector of eigenvalue estimates (non-increasing in magnitude).  If no
/// k < d.size() satisfies the bound, returns d.size() flagged unsatisfied.
AdaptiveRankResult adaptive_rank(const Eigen::VectorXd& eig_estimates,
                                 Eigen::Index n, Eigen::Index p, double tol);

}  // namespace ridgeline::randlinalg
