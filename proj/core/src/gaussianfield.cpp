#include "ridgeline/gaussianfield.hpp"

#include "ridgeline/errors.hpp"

#include <string>
#include <vector>

namespace ridgeline::field {

namespace {

void validate(const FieldConfig& config) {
  require_config(config.nx >= 2 && config.ny >= 2, "FieldConfig: nx, ny must be >= 2");
  require_config(config.gamma >= 0.0, "FieldConfig: gamma must be >= 0");
  require_config(config.delta > 0.0, "FieldConfig: delta must be > 0");
  require_config(config.theta_x > 0.0 && config.theta_y > 0.0,
                 "FieldConfig: anisotropy entries must be > 0");
}

}  // namespace

PrecisionRoot PrecisionRoot::build(const FieldConfig& config) {
  validate(config);
  const Eigen::Index n1 = config.nx + 1;
  const Eigen::Index n2 = config.ny + 1;
  const Eigen::Index n = n1 * n2;
  const double h = 1.0 / static_cast<double>(config.nx);
  const double wx = config.gamma * config.theta_x / (h * h);
  const double wy = config.gamma * config.theta_y / (h * h);
  auto node = [n1](Eigen::Index ix, Eigen::Index iy) { return iy * n1 + ix; };

  // Conservative mirror-ghost Neumann stencil: interior couplings -w with
  // diagonal compensation; at a boundary the outward flux vanishes, so the
  // one-sided row is [w, -w] (symmetric, constants annihilated).
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(5 * n));
  for (Eigen::Index iy = 0; iy < n2; ++iy) {
    for (Eigen::Index ix = 0; ix < n1; ++ix) {
      const Eigen::Index row = node(ix, iy);
      double diag = config.delta;
      if (ix > 0) {
        triplets.emplace_back(row, node(ix - 1, iy), -wx);
        diag += wx;
      }
      if (ix < n1 - 1) {
        triplets.emplace_back(row, node(ix + 1, iy), -wx);
        diag += wx;
      }
      if (iy > 0) {
        triplets.emplace_back(row, node(ix, iy - 1), -wy);
        diag += wy;
      }
      if (iy < n2 - 1) {
        triplets.emplace_back(row, node(ix, iy + 1), -wy);
        diag += wy;
      }
      triplets.emplace_back(row, row, diag);
    }
  }

  PrecisionRoot root;
  root.config_ = config;
  root.a_.resize(n, n);
  root.a_.setFromTriplets(triplets.begin(), triplets.end());
  root.a_.makeCompressed();

  auto llt = std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
  llt->compute(root.a_);
  require_numerical(llt->info() == Eigen::Success,
                    "PrecisionRoot: Cholesky factorization failed (operator not SPD?)");
  root.llt_ = std::move(llt);
  return root;
}

Eigen::MatrixXd PrecisionRoot::solve(const Eigen::MatrixXd& rhs) const {
  require_config(rhs.rows() == dim(), "PrecisionRoot::solve: dimension mismatch");
  Eigen::MatrixXd x = llt_->solve(rhs);
  // Iterative refinement to the documented 1e-12 relative residual.
  for (int sweep = 0; sweep < 3; ++sweep) {
    Eigen::MatrixXd residual = rhs - a_ * x;
    bool converged = true;
    for (Eigen::Index j = 0; j < rhs.cols(); ++j) {
      double rhs_norm = rhs.col(j).norm();
      if (residual.col(j).norm() > 1e-12 * (rhs_norm > 0.0 ? rhs_norm : 1.0)) {
        converged = false;
        break;
      }
    }
    if (converged) return x;
    x += llt_->solve(residual);
  }
  Eigen::MatrixXd residual = rhs - a_ * x;
  for (Eigen::Index j = 0; j < rhs.cols(); ++j) {
    double rhs_norm = rhs.col(j).norm();
    require_numerical(residual.col(j).norm() <= 1e-12 * (rhs_norm > 0.0 ? rhs_norm : 1.0),
                      "PrecisionRoot::solve: refinement stalled at column " +
                          std::to_string(j));
  }
  return x;
}

Eigen::MatrixXd PrecisionRoot::sample(Eigen::Index n, Rng& rng) const {
  require_config(n >= 1, "PrecisionRoot::sample: n must be >= 1");
  return solve(rng.normal_matrix(dim(), n));
}

Eigen::MatrixXd PrecisionRoot::apply_c(const Eigen::MatrixXd& x) const {
  return solve(solve(x));
}

Eigen::MatrixXd PrecisionRoot::apply_cinv(const Eigen::MatrixXd& x) const {
  require_config(x.rows() == dim(), "PrecisionRoot::apply_cinv: dimension mismatch");
  return a_ * (a_ * x);
}

Eigen::MatrixXd PrecisionRoot::apply_csqrt(const Eigen::MatrixXd& x) const {
  return solve(x);
}

Eigen::MatrixXd PrecisionRoot::apply_cinvsqrt(const Eigen::MatrixXd& x) const {
  require_config(x.rows() == dim(), "PrecisionRoot::apply_cinvsqrt: dimension mismatch");
  return a_ * x;
}

randlinalg::SymmetricOperator PrecisionRoot::c_operator() const {
  return randlinalg::SymmetricOperator{
      dim(), [root = *this](const Eigen::MatrixXd& x) { return root.apply_c(x); }};
}

randlinalg::SymmetricOperator PrecisionRoot::csqrt_operator() const {
  return randlinalg::SymmetricOperator{
      dim(), [root = *this](const Eigen::MatrixXd& x) { return root.apply_csqrt(x); }};
}

randlinalg::SymmetricOperator PrecisionRoot::cinv_operator() const {
  return randlinalg::SymmetricOperator{
      dim(), [root = *this](const Eigen::MatrixXd& x) { return root.apply_cinv(x); }};
}

ReducedBasis kle(const PrecisionRoot& root, Eigen::Index r, Rng& rng,
                 Eigen::Index oversampling) {
  require_config(r >= 1 && r <= root.dim(), "kle: rank r must be in [1, d_M]");
  Eigen::Index p = oversampling;
  if (p < 0) p = root.dim() - r;  // saturate: exact subspace
  p = std::min(p, root.dim() - r);
  require_config(p >= 2, "kle: oversampling must leave p >= 2 (rank too close to d_M?)");

  randlinalg::EigResult eig = randomized_eigh(root.c_operator(), r, p, 2, rng);

  ReducedBasis basis;
  basis.matrix = std::move(eig.vectors);
  basis.eigenvalues = eig.eigenvalues.cwiseMax(0.0);
  basis.kind = BasisKind::KLE;
  basis.orthogonality = BasisOrthogonality::Identity;
  basis.seed = rng.seed();
  basis.sample_count = 0;
  return basis;
}

}  // namespace ridgeline::field
