#include "ridgeline/subspaces.hpp"

#include "ridgeline/errors.hpp"
#include "ridgeline/parallel.hpp"
#include "ridgeline/randlinalg.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ridgeline::subspaces {

namespace {

/// Monte Carlo sample set for the Gauss–Newton Hessian: draws, evaluability
/// flags (samples whose PDE solve fails are excluded), and the usable count.
struct HSamples {
  Eigen::MatrixXd m;        // d_M × n_samples
  std::vector<bool> ok;
  Eigen::Index n_ok = 0;
};

HSamples draw_h_samples(const maps::Map& map, const field::PrecisionRoot& field,
                        Eigen::Index n_samples, Rng& rng) {
  require_config(n_samples >= 1, "active_subspace: n_samples must be >= 1");
  HSamples samples;
  samples.m = field.sample(n_samples, rng);
  samples.ok.assign(static_cast<std::size_t>(n_samples), false);
  std::vector<std::optional<bool>> status(static_cast<std::size_t>(n_samples));
  parallel_for(n_samples, [&](std::ptrdiff_t i) {
    try {
      (void)map.evaluate(samples.m.col(i));
      status[static_cast<std::size_t>(i)] = true;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config) throw;
      status[static_cast<std::size_t>(i)] = false;
    }
  });
  for (Eigen::Index i = 0; i < n_samples; ++i) {
    samples.ok[static_cast<std::size_t>(i)] = *status[static_cast<std::size_t>(i)];
    if (samples.ok[static_cast<std::size_t>(i)]) ++samples.n_ok;
  }
  require_numerical(samples.n_ok >= 1,
                    "active_subspace: every sample evaluation failed");
  return samples;
}

/// Matrix-free H = (1/n_ok) Σ Jᵢᵀ Jᵢ over the usable samples; each apply
/// blocks all probe columns per sample before moving on, and the reduction
/// runs in fixed sample order regardless of thread count.
randlinalg::SymmetricOperator h_operator(const maps::Map& map, const HSamples& samples) {
  const Eigen::Index n = samples.m.cols();
  return randlinalg::SymmetricOperator{
      map.input_dim(), [&map, &samples, n](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
        std::vector<Eigen::MatrixXd> terms(static_cast<std::size_t>(n));
        parallel_for(n, [&](std::ptrdiff_t i) {
          if (!samples.ok[static_cast<std::size_t>(i)]) return;
          Eigen::VectorXd m_i = samples.m.col(i);
          Eigen::MatrixXd jx = map.jacobian_action(m_i, x);
          terms[static_cast<std::size_t>(i)] = map.jacobian_transpose_action(m_i, jx);
        });
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
          if (samples.ok[static_cast<std::size_t>(i)])
            sum += terms[static_cast<std::size_t>(i)];
        }
        return sum / static_cast<double>(samples.n_ok);
      }};
}

ReducedBasis as_from_samples(const maps::Map& map, const field::PrecisionRoot& field,
                             const HSamples& samples, Eigen::Index r, Eigen::Index p,
                             Rng& rng) {
  randlinalg::EigResult eig = randlinalg::generalized_eigh_via_transform(
      h_operator(map, samples), field.csqrt_operator(), field.cinv_operator(), r, p,
      rng, 2);
  ReducedBasis basis;
  basis.matrix = std::move(eig.vectors);
  basis.eigenvalues = eig.eigenvalues.cwiseMax(0.0);
  basis.kind = BasisKind::AS;
  basis.orthogonality = BasisOrthogonality::WeightedCinv;
  basis.seed = rng.seed();
  basis.sample_count = samples.n_ok;
  return basis;
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& v) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
  Eigen::MatrixXd r = qr.matrixQR().topRows(v.cols());
  double max_diag = r.diagonal().cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.cols(); ++i) {
    require_numerical(std::abs(r(i, i)) > 1e-12 * max_diag,
                      "orthogonalize: rank-deficient basis (column " +
                          std::to_string(i) + ")");
  }
  return qr.householderQ() * Eigen::MatrixXd::Identity(v.rows(), v.cols());
}

/// Projection onto the basis range for the identity convention: V (Vᵀ x).
Eigen::VectorXd project(const Eigen::MatrixXd& v, const Eigen::VectorXd& x) {
  return v * (v.transpose() * x);
}

}  // namespace

ReducedBasis active_subspace(const maps::Map& map, const field::PrecisionRoot& field,
                             Eigen::Index n_samples, Eigen::Index r, Eigen::Index p,
                             Rng& rng, Eigen::Index* failure_count) {
  require_config(map.input_dim() == field.dim(),
                 "active_subspace: map input dim and field dim disagree");
  HSamples samples = draw_h_samples(map, field, n_samples, rng);
  if (failure_count != nullptr) *failure_count = n_samples - samples.n_ok;
  return as_from_samples(map, field, samples, r, p, rng);
}

PodResult pod(const Eigen::MatrixXd& snapshots, Eigen::Index r) {
  const Eigen::Index d = snapshots.rows();
  const Eigen::Index n = snapshots.cols();
  require_config(d >= 1 && n >= 1, "pod: empty snapshot set");
  require_config(r >= 1, "pod: rank must be >= 1");

  PodResult result;
  result.mean = snapshots.rowwise().mean();

  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // d × (full spectrum length)
  if (n < d) {
    // Method of snapshots: N×N Gram route.
    Eigen::MatrixXd gram = snapshots.transpose() * snapshots / static_cast<double>(n);
    randlinalg::EigResult eig = randlinalg::jacobi_eigh(gram);
    values = eig.eigenvalues;
    vectors.resize(d, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double scale = std::sqrt(static_cast<double>(n) * std::max(values[i], 0.0));
      if (scale > 0.0)
        vectors.col(i) = snapshots * eig.vectors.col(i) / scale;
      else
        vectors.col(i).setZero();
    }
  } else {
    Eigen::MatrixXd outer = snapshots * snapshots.transpose() / static_cast<double>(n);
    randlinalg::EigResult eig = randlinalg::jacobi_eigh(outer);
    values = eig.eigenvalues;
    vectors = eig.vectors;
  }

  // Numerical snapshot rank: eigenvalues at relative level 1e-12 or below
  // (of squared magnitude) do not define usable directions.
  double lead = std::max(values.size() > 0 ? values[0] : 0.0, 0.0);
  Eigen::Index rank = 0;
  while (rank < values.size() && values[rank] > 1e-12 * lead && values[rank] > 0.0)
    ++rank;
  Eigen::Index kept = std::min(r, rank);
  result.truncated = kept < r;

  ReducedBasis& basis = result.basis;
  basis.matrix = vectors.leftCols(kept);
  basis.eigenvalues = values.head(kept).cwiseMax(0.0);
  basis.kind = BasisKind::POD;
  basis.orthogonality = BasisOrthogonality::Identity;
  basis.sample_count = n;
  return result;
}

ReducedBasis random_basis(Eigen::Index d, Eigen::Index r, Rng& rng, BasisKind kind) {
  require_config(r >= 1 && r <= d, "random_basis: need 1 <= r <= d");
  require_config(kind == BasisKind::RandomInput || kind == BasisKind::RandomOutput,
                 "random_basis: kind must be a random basis kind");
  ReducedBasis basis;
  basis.matrix = orthonormal_columns(rng.normal_matrix(d, r));
  basis.eigenvalues = Eigen::VectorXd::Ones(r);
  basis.kind = kind;
  basis.orthogonality = BasisOrthogonality::Identity;
  basis.seed = rng.seed();
  return basis;
}

ReducedBasis orthogonalize_rescale(const ReducedBasis& basis, bool rescale) {
  require_config(basis.matrix.size() > 0, "orthogonalize_rescale: empty basis");
  ReducedBasis out = basis;
  out.matrix = orthonormal_columns(basis.matrix);
  out.orthogonality = BasisOrthogonality::Identity;
  if (rescale && basis.eigenvalues.size() > 0 && basis.eigenvalues[0] > 0.0) {
    for (Eigen::Index i = 0; i < out.rank(); ++i) {
      double ratio = i < basis.eigenvalues.size()
                         ? std::max(basis.eigenvalues[i], 0.0) / basis.eigenvalues[0]
                         : 0.0;
      out.matrix.col(i) *= std::max(std::sqrt(ratio), 1e-3);
    }
  }
  return out;
}

ProjectionErrorResult projection_error(const maps::Map& map,
                                       const Eigen::MatrixXd& m_test,
                                       const Eigen::MatrixXd& q_test,
                                       const RidgeProjectors& projectors) {
  const Eigen::Index n = m_test.cols();
  require_config(n >= 1 && q_test.cols() == n,
                 "projection_error: test set columns disagree");
  require_config(m_test.rows() == map.input_dim() && q_test.rows() == map.output_dim(),
                 "projection_error: test set dimensions disagree with the map");
  require_config(projectors.output.orthogonality == BasisOrthogonality::Identity,
                 "projection_error: output basis must be identity-orthonormal");

  // Both AS (weighted) and KLE (identity) enter under one convention.
  Eigen::MatrixXd v = projectors.input.orthogonality == BasisOrthogonality::Identity
                          ? projectors.input.matrix
                          : orthonormal_columns(projectors.input.matrix);
  const Eigen::MatrixXd& phi = projectors.output.matrix;

  std::vector<double> errors(static_cast<std::size_t>(n),
                             std::numeric_limits<double>::quiet_NaN());
  parallel_for(n, [&](std::ptrdiff_t i) {
    double q_norm = q_test.col(i).norm();
    if (q_norm == 0.0) return;  // counted as failed below
    try {
      Eigen::VectorXd q_proj = map.evaluate(project(v, m_test.col(i)));
      errors[static_cast<std::size_t>(i)] =
          (phi * (phi.transpose() * q_proj) - q_test.col(i)).norm() / q_norm;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config) throw;
    }
  });

  ProjectionErrorResult result;
  double sum = 0.0;
  for (double e : errors) {
    if (std::isnan(e)) {
      ++result.n_failed;
    } else {
      sum += e;
      ++result.n_used;
    }
  }
  require_numerical(result.n_used >= 1, "projection_error: all evaluations failed");
  result.mean = sum / static_cast<double>(result.n_used);
  if (result.n_used > 1) {
    double ss = 0.0;
    for (double e : errors)
      if (!std::isnan(e)) ss += (e - result.mean) * (e - result.mean);
    result.standard_error = std::sqrt(ss / static_cast<double>(result.n_used - 1)) /
                            std::sqrt(static_cast<double>(result.n_used));
  }
  return result;
}

ConditionalExpectationResult conditional_expectation(const maps::Map& map,
                                                     const field::PrecisionRoot& field,
                                                     const ReducedBasis& as_basis,
                                                     const Eigen::VectorXd& m,
                                                     Eigen::Index n_inner, Rng& rng) {
  require_config(as_basis.orthogonality == BasisOrthogonality::WeightedCinv,
                 "conditional_expectation: projector must be C⁻¹-orthonormal "
                 "(P_r = V Vᵀ C⁻¹)");
  require_config(n_inner >= 1, "conditional_expectation: n_inner must be >= 1");
  require_config(m.size() == map.input_dim(),
                 "conditional_expectation: parameter has wrong dimension");
  const Eigen::MatrixXd& v = as_basis.matrix;

  Eigen::VectorXd pm = v * (v.transpose() * field.apply_cinv(m));
  Eigen::MatrixXd y = field.sample(n_inner, rng);
  Eigen::MatrixXd y_proj = v * (v.transpose() * field.apply_cinv(y));

  Eigen::MatrixXd q(map.output_dim(), n_inner);
  parallel_for(n_inner, [&](std::ptrdiff_t j) {
    q.col(j) = map.evaluate(pm + y.col(j) - y_proj.col(j));
  });

  ConditionalExpectationResult result;
  result.mean = q.rowwise().mean();
  result.standard_error = Eigen::VectorXd::Zero(map.output_dim());
  if (n_inner > 1) {
    Eigen::VectorXd variance =
        (q.colwise() - result.mean).rowwise().squaredNorm() /
        static_cast<double>(n_inner - 1);
    result.standard_error =
        (variance / static_cast<double>(n_inner)).cwiseSqrt();
  }
  return result;
}

BoundCheckReport bound_check_with(const maps::Map& map,
                                  const field::PrecisionRoot& field,
                                  const BoundCheckInputs& inputs,
                                  Eigen::Index n_outer, Eigen::Index n_inner,
                                  Rng& rng) {
  require_config(n_outer >= 2 && n_inner >= 1,
                 "bound_check: need n_outer >= 2 and n_inner >= 1");
  ReducedBasis as_basis;
  as_basis.matrix = inputs.as_basis;
  as_basis.kind = BasisKind::AS;
  as_basis.orthogonality = BasisOrthogonality::WeightedCinv;
  const Eigen::MatrixXd& phi = inputs.pod_basis;

  Eigen::MatrixXd outer = field.sample(n_outer, rng);
  Eigen::VectorXd values(n_outer);
  Eigen::VectorXd energy(n_outer);
  parallel_for(n_outer, [&](std::ptrdiff_t j) {
    Rng inner_rng = rng.child(static_cast<std::uint64_t>(j));
    ConditionalExpectationResult ce = conditional_expectation(
        map, field, as_basis, outer.col(j), n_inner, inner_rng);
    Eigen::VectorXd q = map.evaluate(outer.col(j));
    Eigen::VectorXd ridge = phi * (phi.transpose() * ce.mean);
    values[j] = (q - ridge).squaredNorm();
    energy[j] = q.squaredNorm();
  });

  BoundCheckReport report;
  report.n_outer = n_outer;
  report.n_inner = n_inner;
  report.lhs = values.mean();
  report.lhs_se = std::sqrt((values.array() - report.lhs).square().sum() /
                            static_cast<double>(n_outer - 1)) /
                  std::sqrt(static_cast<double>(n_outer));
  report.rhs = inputs.trailing_lambda_m + inputs.trailing_lambda_q;
  report.rhs_se = std::hypot(inputs.trailing_lambda_m_se, inputs.trailing_lambda_q_se);
  report.combined_se = std::hypot(report.lhs_se, report.rhs_se);
  report.margin = report.rhs + 3.0 * report.combined_se - report.lhs;
  // Rounding guard: with exact ingredients both sides can be zero to machine
  // precision, and the comparison must not fail on that dust.
  const double slack = 1e-12 * energy.mean();
  report.pass = report.lhs <= report.rhs + 3.0 * report.combined_se + slack;
  return report;
}

BoundCheckReport bound_check(const maps::Map& map, const field::PrecisionRoot& field,
                             Eigen::Index r_m, Eigen::Index r_q,
                             Eigen::Index n_as, Eigen::Index n_pod,
                             Eigen::Index n_outer, Eigen::Index n_inner, Rng& rng) {
  require_config(r_m >= 1 && r_q >= 1, "bound_check: ranks must be >= 1");

  // Empirical Gauss–Newton Hessian: basis, Ritz values, and the trailing
  // eigenvalue sum as the mean of per-sample statistics
  //   s_i = ‖C^{1/2}∇q(m_i)ᵀ‖_F² − ‖∇q(m_i) V_r‖_F²  (≥ 0),
  // whose mean is exactly tr(C^{1/2}HC^{1/2}) − Σ_{j≤r} λ̂_j for Ritz pairs
  // of the same empirical H, and whose spread is the honest Monte Carlo
  // standard error of the difference (trace and Ritz sum are correlated, so
  // the raw-trace SE would be wildly conservative).
  HSamples samples = draw_h_samples(map, field, n_as, rng);
  Eigen::Index p = std::min<Eigen::Index>(r_m + 10, field.dim() - r_m);
  ReducedBasis as_basis = as_from_samples(map, field, samples, r_m, p, rng);

  auto mean_se = [](const std::vector<double>& values, const std::vector<bool>& ok,
                    Eigen::Index n_ok) {
    double mean = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (ok.empty() || ok[i]) mean += values[i];
    mean /= static_cast<double>(n_ok);
    double var = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!ok.empty() && !ok[i]) continue;
      var += (values[i] - mean) * (values[i] - mean);
    }
    double se = n_ok > 1 ? std::sqrt(var / static_cast<double>(n_ok - 1)) /
                               std::sqrt(static_cast<double>(n_ok))
                         : 0.0;
    return std::pair<double, double>{mean, se};
  };

  const Eigen::Index n = samples.m.cols();
  Eigen::MatrixXd eye_q = Eigen::MatrixXd::Identity(map.output_dim(), map.output_dim());
  std::vector<double> trailing_m(static_cast<std::size_t>(n), 0.0);
  parallel_for(n, [&](std::ptrdiff_t i) {
    if (!samples.ok[static_cast<std::size_t>(i)]) return;
    Eigen::MatrixXd jt = map.jacobian_transpose_action(samples.m.col(i), eye_q);
    double total = field.apply_csqrt(jt).squaredNorm();
    double captured = (as_basis.matrix.transpose() * jt).squaredNorm();
    trailing_m[static_cast<std::size_t>(i)] = std::max(0.0, total - captured);
  });
  auto [tlm, tlm_se] = mean_se(trailing_m, samples.ok, samples.n_ok);

  BoundCheckInputs inputs;
  inputs.as_basis = as_basis.matrix;
  inputs.trailing_lambda_m = tlm;
  inputs.trailing_lambda_m_se = tlm_se;

  // POD side: per-sample s_i = ‖q_i‖² − ‖Φ_rᵀ q_i‖², whose mean is the
  // trailing sum of the empirical output covariance spectrum.
  Eigen::MatrixXd pod_m = field.sample(n_pod, rng);
  Eigen::MatrixXd snapshots(map.output_dim(), n_pod);
  parallel_for(n_pod, [&](std::ptrdiff_t i) {
    snapshots.col(i) = map.evaluate(pod_m.col(i));
  });
  PodResult pod_result = pod(snapshots, r_q);
  std::vector<double> trailing_q(static_cast<std::size_t>(n_pod), 0.0);
  for (Eigen::Index i = 0; i < n_pod; ++i) {
    double total = snapshots.col(i).squaredNorm();
    double captured =
        (pod_result.basis.matrix.transpose() * snapshots.col(i)).squaredNorm();
    trailing_q[static_cast<std::size_t>(i)] = std::max(0.0, total - captured);
  }
  auto [tlq, tlq_se] = mean_se(trailing_q, {}, n_pod);

  inputs.pod_basis = pod_result.basis.matrix;
  inputs.trailing_lambda_q = tlq;
  inputs.trailing_lambda_q_se = tlq_se;

  return bound_check_with(map, field, inputs, n_outer, n_inner, rng);
}

}  // namespace ridgeline::subspaces
