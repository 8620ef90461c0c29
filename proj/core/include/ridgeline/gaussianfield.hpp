#pragma once

#include "ridgeline/basis.hpp"
#include "ridgeline/randlinalg.hpp"
#include "ridgeline/rng.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <memory>

namespace ridgeline::field {

/// Matérn-type Gaussian field ν = N(0, C) on a 2D grid, C = (δI + γL_h)^{-α}
/// with α = 2 and L_h the 5-point Neumann Laplacian (homogeneous, mirror
/// ghosts) scaled by 1/h², h = 1/nx.  Nodes are ordered row-major:
/// index = iy·(nx+1) + ix.
struct FieldConfig {
  Eigen::Index nx = 32;  // grid cells per side; nodes = (nx+1)(ny+1)
  Eigen::Index ny = 32;
  double gamma = 0.1;
  double delta = 1.0;
  double theta_x = 1.0;  // diagonal anisotropy Θ = diag(θ_x, θ_y)
  double theta_y = 1.0;

  [[nodiscard]] Eigen::Index dim() const { return (nx + 1) * (ny + 1); }
};

/// Assembled precision root A = δI + γL_h with a sparse Cholesky
/// factorization.  Since α = 2: C = A⁻², C^{1/2} = A⁻¹, C⁻¹ = A²,
/// C^{-1/2} = A.  Immutable after build; all operations are const and safe
/// to call concurrently.
class PrecisionRoot {
 public:
  static PrecisionRoot build(const FieldConfig& config);

  [[nodiscard]] Eigen::Index dim() const { return a_.rows(); }
  [[nodiscard]] const FieldConfig& config() const { return config_; }
  [[nodiscard]] const Eigen::SparseMatrix<double>& matrix() const { return a_; }

  /// Solves A x = b columnwise to relative residual 1e-12 (Cholesky plus
  /// iterative refinement).
  [[nodiscard]] Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

  /// Draws n samples m ~ N(0, A⁻²); column i is A⁻¹ξ_i with ξ ~ N(0, I).
  [[nodiscard]] Eigen::MatrixXd sample(Eigen::Index n, Rng& rng) const;

  [[nodiscard]] Eigen::MatrixXd apply_c(const Eigen::MatrixXd& x) const;         // A⁻²x
  [[nodiscard]] Eigen::MatrixXd apply_cinv(const Eigen::MatrixXd& x) const;      // A²x
  [[nodiscard]] Eigen::MatrixXd apply_csqrt(const Eigen::MatrixXd& x) const;     // A⁻¹x
  [[nodiscard]] Eigen::MatrixXd apply_cinvsqrt(const Eigen::MatrixXd& x) const;  // Ax

  /// Operator views for the randomized eigensolvers.  Each holds a copy of
  /// this root (factorization shared), so it outlives the source object.
  [[nodiscard]] randlinalg::SymmetricOperator c_operator() const;
  [[nodiscard]] randlinalg::SymmetricOperator csqrt_operator() const;
  [[nodiscard]] randlinalg::SymmetricOperator cinv_operator() const;

 private:
  PrecisionRoot() = default;

  FieldConfig config_;
  Eigen::SparseMatrix<double> a_;
  std::shared_ptr<const Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> llt_;
};

/// Top-r KLE basis of C (identity-orthonormal eigenvectors, descending
/// eigenvalues c_i) via randomized_eigh on the C action.  `oversampling` < 0
/// saturates to d_M − r, making the projection subspace the full space and
/// the eigenpairs exact to roundoff; smaller values trade accuracy for cost.
/// The rank-r mean-square representation error of samples equals the
/// trailing eigenvalue sum Σ_{i>r} c_i.
ReducedBasis kle(const PrecisionRoot& root, Eigen::Index r, Rng& rng,
                 Eigen::Index oversampling = -1);

}  // namespace ridgeline::field
