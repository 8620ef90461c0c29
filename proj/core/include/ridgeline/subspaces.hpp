#pragma once

#include "ridgeline/basis.hpp"
#include "ridgeline/gaussianfield.hpp"
#include "ridgeline/parametricmap.hpp"
#include "ridgeline/rng.hpp"

#include <Eigen/Core>

namespace ridgeline::subspaces {

/// Input/output projector pair for ridge-function construction.
struct RidgeProjectors {
  ReducedBasis input;            // rank r_M over the parameter space
  ReducedBasis output;           // rank r_Q over the observable space (POD)
  Eigen::VectorXd output_shift;  // b_Q, default: training-output mean
};

/// Active subspace of the map under the field's distribution: top-r
/// generalized eigenpairs of H v = λ C⁻¹ v where
/// H ≈ (1/N) Σ ∇q(m_i)ᵀ∇q(m_i) is applied matrix-free (per sample, all
/// probes blocked).  Result is C⁻¹-orthonormal with eigenvalues λ_i^M.
/// Samples whose evaluation fails are excluded; the count is written to
/// *failure_count when provided.
ReducedBasis active_subspace(const maps::Map& map, const field::PrecisionRoot& field,
                             Eigen::Index n_samples, Eigen::Index r, Eigen::Index p,
                             Rng& rng, Eigen::Index* failure_count = nullptr);

struct PodResult {
  ReducedBasis basis;    // identity-orthonormal Φ, eigenvalues λ_i^Q
  Eigen::VectorXd mean;  // snapshot mean, the default b_Q
  bool truncated = false;  // true when requested rank exceeded snapshot rank
};

/// POD of uncentered snapshots (d_Q×N): eigenpairs of (1/N) Σ q_i q_iᵀ,
/// computed through the N×N Gram matrix when N < d_Q (method of snapshots).
/// Requested ranks beyond the numerical snapshot rank are truncated.
PodResult pod(const Eigen::MatrixXd& snapshots, Eigen::Index r);

/// Orthonormalized Gaussian matrix; eigenvalues set to 1 (uninformative).
ReducedBasis random_basis(Eigen::Index d, Eigen::Index r, Rng& rng,
                          BasisKind kind = BasisKind::RandomInput);

/// Thin-QR re-orthonormalization (always), then optional column rescaling by
/// √(λ_i/λ₁) clipped below at 1e-3.  With rescale=false the result is
/// identity-orthonormal; with rescale=true the columns carry spectral
/// weights for use as a network input layer (the recorded design decision),
/// at the cost of exact orthonormality.
ReducedBasis orthogonalize_rescale(const ReducedBasis& basis, bool rescale);

struct ProjectionErrorResult {
  double mean = 0.0;
  double standard_error = 0.0;
  Eigen::Index n_used = 0;
  Eigen::Index n_failed = 0;
};

/// Monte Carlo input–output projection error over a held-out test set:
/// mean of ‖Φ_{r_Q}Φ_{r_Q}ᵀ q(V V ᵀ m_i) − q_i‖ / ‖q_i‖ with fresh map
/// evaluations at the projected inputs.  Weighted input bases are first
/// re-orthonormalized so both AS and KLE are compared under the identity
/// convention.  Failed evaluations are skipped and counted.
ProjectionErrorResult projection_error(const maps::Map& map,
                                       const Eigen::MatrixXd& m_test,
                                       const Eigen::MatrixXd& q_test,
                                       const RidgeProjectors& projectors);

struct ConditionalExpectationResult {
  Eigen::VectorXd mean;            // q̄ ∈ ℝ^{d_Q}
  Eigen::VectorXd standard_error;  // componentwise MC standard error
};

/// Conditional expectation E[q | σ(P_r)] at m, with P_r = V_r V_rᵀ C⁻¹ from
/// a weighted AS basis: Monte Carlo average of q(P_r m + (I − P_r) y) over
/// n_inner draws y ~ ν.
ConditionalExpectationResult conditional_expectation(const maps::Map& map,
                                                     const field::PrecisionRoot& field,
                                                     const ReducedBasis& as_basis,
                                                     const Eigen::VectorXd& m,
                                                     Eigen::Index n_inner, Rng& rng);

/// Exact ingredients for the ridge bound check; see bound_check.
struct BoundCheckInputs {
  Eigen::MatrixXd as_basis;          // d_M×r_M, C⁻¹-orthonormal
  double trailing_lambda_m = 0.0;    // Σ_{i>r_M} λ_i^M
  double trailing_lambda_m_se = 0.0; // its MC standard error (0 if exact)
  Eigen::MatrixXd pod_basis;         // d_Q×r_Q, identity-orthonormal
  double trailing_lambda_q = 0.0;    // Σ_{i>r_Q} λ_i^Q
  double trailing_lambda_q_se = 0.0;
};

struct BoundCheckReport {
  double lhs = 0.0;          // nested-MC estimate of E‖q − ΦΦᵀ q_{r_M}‖²
  double lhs_se = 0.0;       // outer-loop standard error
  double rhs = 0.0;          // Σ_{i>r_M} λ^M + Σ_{i>r_Q} λ^Q
  double rhs_se = 0.0;
  double combined_se = 0.0;  // √(lhs_se² + rhs_se²)
  double margin = 0.0;       // rhs + 3·combined_se − lhs
  /// lhs ≤ rhs + 3·combined_se, with an absolute slack of 1e-12 times the
  /// mean output energy so a mathematically tight bound (equality at zero)
  /// cannot fail on rounding dust.
  bool pass = false;
  Eigen::Index n_outer = 0;
  Eigen::Index n_inner = 0;
};

/// Ridge-function error bound check with caller-supplied bases and trailing
/// eigenvalue sums (e.g. dense-exact values on a linear map).  LHS is the
/// nested Monte Carlo estimate of E‖q − Φ_{r_Q}Φ_{r_Q}ᵀ q_{r_M}‖² with
/// q_{r_M} the inner-loop conditional expectation; PASS iff
/// lhs ≤ rhs + 3·combined standard error.
BoundCheckReport bound_check_with(const maps::Map& map,
                                  const field::PrecisionRoot& field,
                                  const BoundCheckInputs& inputs,
                                  Eigen::Index n_outer, Eigen::Index n_inner,
                                  Rng& rng);

/// Self-contained bound check: builds the empirical AS basis (n_as samples)
/// and POD basis (n_pod snapshots), computes trailing sums exactly for those
/// empirical operators (trace identities: tr H C = (1/N)Σ‖∇q(m_i)·C^{1/2}‖_F²
/// and tr(1/N)Σq qᵀ = (1/N)Σ‖q_i‖²), and runs the nested MC.
BoundCheckReport bound_check(const maps::Map& map, const field::PrecisionRoot& field,
                             Eigen::Index r_m, Eigen::Index r_q,
                             Eigen::Index n_as, Eigen::Index n_pod,
                             Eigen::Index n_outer, Eigen::Index n_inner, Rng& rng);

}  // namespace ridgeline::subspaces
