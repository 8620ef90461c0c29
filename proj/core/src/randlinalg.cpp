#include "ridgeline/randlinalg.hpp"

#include "ridgeline/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace ridgeline::randlinalg {

namespace {

/// Applies the operator to a probe block and validates shape/finiteness.
Eigen::MatrixXd checked_apply(const SymmetricOperator& op,
                              const Eigen::MatrixXd& block) {
  require_config(block.rows() == op.dim,
                 "randomized_eigh: probe block has " +
                     std::to_string(block.rows()) + " rows, operator dim is " +
                     std::to_string(op.dim));
  Eigen::MatrixXd image = op.apply(block);
  require_config(image.rows() == op.dim && image.cols() == block.cols(),
                 "randomized_eigh: operator returned a " +
                     std::to_string(image.rows()) + "x" +
                     std::to_string(image.cols()) + " block for a " +
                     std::to_string(op.dim) + "x" +
                     std::to_string(block.cols()) + " probe");
  for (Eigen::Index j = 0; j < image.cols(); ++j) {
    if (!image.col(j).allFinite()) {
      throw_numerical("randomized_eigh: non-finite operator output at probe column " +
                      std::to_string(j));
    }
  }
  return image;
}

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

/// One cyclic sweep of two-sided Jacobi rotations over all (p, q) pairs.
void jacobi_sweep(Eigen::MatrixXd& a, Eigen::MatrixXd& v) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index p = 0; p < n - 1; ++p) {
    for (Eigen::Index q = p + 1; q < n; ++q) {
      double apq = a(p, q);
      if (apq == 0.0) continue;
      double app = a(p, p);
      double aqq = a(q, q);
      // Rotation angle from the standard stable formulation.
      double tau = (aqq - app) / (2.0 * apq);
      double t = (tau >= 0.0 ? 1.0 : -1.0) /
                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
      double c = 1.0 / std::sqrt(1.0 + t * t);
      double s = t * c;
      for (Eigen::Index i = 0; i < n; ++i) {
        double aip = a(i, p);
        double aiq = a(i, q);
        a(i, p) = c * aip - s * aiq;
        a(i, q) = s * aip + c * aiq;
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        double api = a(p, i);
        double aqi = a(q, i);
        a(p, i) = c * api - s * aqi;
        a(q, i) = s * api + c * aqi;
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        double vip = v(i, p);
        double viq = v(i, q);
        v(i, p) = c * vip - s * viq;
        v(i, q) = s * vip + c * viq;
      }
    }
  }
}

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

void sort_descending(Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return values[a] > values[b];
  });
  Eigen::VectorXd sorted_values(n);
  Eigen::MatrixXd sorted_vectors(vectors.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sorted_values[i] = values[order[static_cast<std::size_t>(i)]];
    sorted_vectors.col(i) = vectors.col(order[static_cast<std::size_t>(i)]);
  }
  values = std::move(sorted_values);
  vectors = std::move(sorted_vectors);
}

}  // namespace

Eigen::MatrixXd SymmetricOperator::operator()(const Eigen::MatrixXd& x) const {
  return apply(x);
}

SymmetricOperator SymmetricOperator::from_matrix(const Eigen::MatrixXd& a) {
  require_config(a.rows() == a.cols(), "SymmetricOperator: matrix must be square");
  return SymmetricOperator{a.rows(),
                           [a](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return a * x; }};
}

EigResult jacobi_eigh(const Eigen::MatrixXd& a, double tol) {
  require_config(a.rows() == a.cols(), "jacobi_eigh: matrix must be square");
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd work = 0.5 * (a + a.transpose());
  Eigen::MatrixXd vectors = Eigen::MatrixXd::Identity(n, n);
  const double scale = work.norm();
  if (n > 1 && scale > 0.0) {
    constexpr int kMaxSweeps = 50;
    int sweep = 0;
    while (off_diagonal_norm(work) > tol * scale) {
      require_numerical(sweep++ < kMaxSweeps,
                        "jacobi_eigh: no convergence after 50 sweeps");
      jacobi_sweep(work, vectors);
    }
  }
  Eigen::VectorXd values = work.diagonal();
  sort_descending(values, vectors);
  return EigResult{std::move(values), std::move(vectors), Orthogonality::Identity};
}

EigResult randomized_eigh(const SymmetricOperator& op, Eigen::Index k,
                          Eigen::Index p, int passes, Rng& rng) {
  require_config(op.dim > 0 && static_cast<bool>(op.apply),
                 "randomized_eigh: operator is empty");
  require_config(k >= 1, "randomized_eigh: rank k must be >= 1");
  require_config(p >= 2, "randomized_eigh: oversampling p must be >= 2");
  require_config(k + p <= op.dim, "randomized_eigh: k + p must not exceed dim");
  require_config(passes == 1 || passes == 2, "randomized_eigh: passes must be 1 or 2");

  const Eigen::Index width = k + p;
  Eigen::MatrixXd omega = rng.normal_matrix(op.dim, width);
  Eigen::MatrixXd y = checked_apply(op, omega);

  Eigen::MatrixXd q;
  Eigen::MatrixXd b;
  if (passes == 1) {
    // Single-pass: recover the projected matrix from Y and Ω alone through
    // the least-squares system B (QᵀΩ) = QᵀY, then symmetrize.
    q = thin_q(y);
    Eigen::MatrixXd qt_omega = q.transpose() * omega;  // width×width
    Eigen::MatrixXd qt_y = q.transpose() * y;
    // Solve (QᵀΩ)ᵀ Bᵀ = (QᵀY)ᵀ column-block-wise.
    Eigen::MatrixXd bt =
        qt_omega.transpose().colPivHouseholderQr().solve(qt_y.transpose());
    b = 0.5 * (bt.transpose() + bt);
  } else {
    // One power iteration with re-orthonormalization, then Rayleigh–Ritz.
    Eigen::MatrixXd q1 = thin_q(y);
    Eigen::MatrixXd y2 = checked_apply(op, q1);
    q = thin_q(y2);
    Eigen::MatrixXd aq = checked_apply(op, q);
    Eigen::MatrixXd qt_aq = q.transpose() * aq;
    b = 0.5 * (qt_aq + qt_aq.transpose());
  }

  EigResult small = jacobi_eigh(b);
  EigResult result;
  result.eigenvalues = small.eigenvalues.head(k);
  result.vectors = q * small.vectors.leftCols(k);
  result.orthogonality = Orthogonality::Identity;
  return result;
}

EigResult generalized_eigh_via_transform(const SymmetricOperator& h,
                                         const SymmetricOperator& c_sqrt,
                                         const SymmetricOperator& c_inv,
                                         Eigen::Index k, Eigen::Index p,
                                         Rng& rng, int passes) {
  require_config(h.dim == c_sqrt.dim && h.dim == c_inv.dim,
                 "generalized_eigh_via_transform: operator dims disagree");
  SymmetricOperator s{h.dim, [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
                        return c_sqrt.apply(h.apply(c_sqrt.apply(x)));
                      }};
  EigResult transformed = randomized_eigh(s, k, p, passes, rng);

  EigResult result;
  result.eigenvalues = std::move(transformed.eigenvalues);
  result.vectors = c_sqrt.apply(transformed.vectors);
  result.orthogonality = Orthogonality::WeightedCinv;

  Eigen::MatrixXd gram = result.vectors.transpose() * c_inv.apply(result.vectors);
  double deviation =
      (gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
  require_numerical(deviation <= 1e-6,
                    "generalized_eigh_via_transform: C^-1-orthonormality lost "
                    "(deviation " + std::to_string(deviation) + ")");
  return result;
}

AdaptiveRankResult adaptive_rank(const Eigen::VectorXd& eig_estimates,
                                 Eigen::Index n, Eigen::Index p, double tol) {
  require_config(eig_estimates.size() > 0, "adaptive_rank: empty estimate vector");
  require_config(p >= 2, "adaptive_rank: oversampling p must be >= 2");
  require_config(tol > 0.0, "adaptive_rank: tolerance must be positive");
  const Eigen::Index len = eig_estimates.size();
  for (Eigen::Index k = 0; k < len; ++k) {
    double factor =
        1.0 + 4.0 * std::sqrt(static_cast<double>(n) * static_cast<double>(k + p)) /
                  (static_cast<double>(p) - 1.0);
    if (factor * std::abs(eig_estimates[k]) <= tol) {
      return AdaptiveRankResult{k, true};
    }
  }
  return AdaptiveRankResult{len, false};
}

}  // namespace ridgeline::randlinalg
