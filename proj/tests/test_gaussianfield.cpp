#include "ridgeline/gaussianfield.hpp"

#include "ridgeline/errors.hpp"
#include "ridgeline/rng.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

namespace {

using ridgeline::Error;
using ridgeline::ReducedBasis;
using ridgeline::Rng;
namespace field = ridgeline::field;

field::FieldConfig grid(Eigen::Index n, double gamma, double delta) {
  field::FieldConfig cfg;
  cfg.nx = n;
  cfg.ny = n;
  cfg.gamma = gamma;
  cfg.delta = delta;
  return cfg;
}

/// Independent dense assembly of A = delta I + gamma L_h with the
/// conservative Neumann closure: an absent neighbor contributes neither the
/// coupling nor its diagonal compensation, so every row sums to delta and the
/// matrix is symmetric.
Eigen::MatrixXd dense_stencil_a(const field::FieldConfig& cfg) {
  const Eigen::Index nxp = cfg.nx + 1;
  const Eigen::Index nyp = cfg.ny + 1;
  const Eigen::Index d = nxp * nyp;
  const double h = 1.0 / static_cast<double>(cfg.nx);
  const double wx = cfg.gamma * cfg.theta_x / (h * h);
  const double wy = cfg.gamma * cfg.theta_y / (h * h);
  auto node = [nxp](Eigen::Index ix, Eigen::Index iy) { return iy * nxp + ix; };
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index iy = 0; iy < nyp; ++iy) {
    for (Eigen::Index ix = 0; ix < nxp; ++ix) {
      const Eigen::Index row = node(ix, iy);
      a(row, row) += cfg.delta;
      if (ix > 0) {
        a(row, node(ix - 1, iy)) -= wx;
        a(row, row) += wx;
      }
      if (ix < cfg.nx) {
        a(row, node(ix + 1, iy)) -= wx;
        a(row, row) += wx;
      }
      if (iy > 0) {
        a(row, node(ix, iy - 1)) -= wy;
        a(row, row) += wy;
      }
      if (iy < cfg.ny) {
        a(row, node(ix, iy + 1)) -= wy;
        a(row, row) += wy;
      }
    }
  }
  return a;
}

}  // namespace

TEST_CASE("gamma=0 reduces A to delta times the identity") {
  auto root = field::PrecisionRoot::build(grid(6, 0.0, 2.0));
  const Eigen::Index d = root.dim();
  REQUIRE(d == 49);

  Eigen::VectorXd e1 = Eigen::VectorXd::Unit(d, 0);
  Eigen::VectorXd ce1 = root.apply_c(e1);
  CHECK((ce1 - 0.25 * e1).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::MatrixXd a = Eigen::MatrixXd(root.matrix());
  CHECK((a - 2.0 * Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() <=
        1e-14);
}

TEST_CASE("Neumann Laplacian annihilates constants: A 1 = delta 1") {
  for (auto [gamma, delta] : {std::pair{0.1, 1.0}, std::pair{1.0, 5.0}}) {
    auto root = field::PrecisionRoot::build(grid(8, gamma, delta));
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(root.dim());
    Eigen::VectorXd a_ones = root.matrix() * ones;
    CHECK((a_ones - delta * ones).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("sparse assembly matches the dense stencil oracle on 8x8") {
  field::FieldConfig cfg = grid(8, 0.1, 1.0);
  auto root = field::PrecisionRoot::build(cfg);
  Eigen::MatrixXd dense = Eigen::MatrixXd(root.matrix());
  Eigen::MatrixXd oracle = dense_stencil_a(cfg);
  CHECK((dense - oracle).cwiseAbs().maxCoeff() <= 1e-12);

  // SPD spot check on random vectors.
  Rng rng(4);
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd x = rng.normal_matrix(root.dim(), 1);
    CHECK(x.dot(oracle * x) > 0.0);
  }
}

TEST_CASE("solve inverts A to tight relative residual") {
  auto root = field::PrecisionRoot::build(grid(12, 0.3, 0.7));
  Rng rng(8);
  Eigen::MatrixXd b = rng.normal_matrix(root.dim(), 3);
  Eigen::MatrixXd x = root.solve(b);
  Eigen::MatrixXd residual = root.matrix() * x - b;
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    CHECK(residual.col(j).norm() <= 1e-12 * b.col(j).norm());
  }
}

TEST_CASE("samples with C = I are standard normal per node") {
  auto root = field::PrecisionRoot::build(grid(8, 0.0, 1.0));
  Rng rng(2024);
  const Eigen::Index n = 10000;
  Eigen::MatrixXd draws = root.sample(n, rng);
  REQUIRE(draws.rows() == 81);
  REQUIRE(draws.cols() == n);

  Eigen::VectorXd mean = draws.rowwise().mean();
  Eigen::VectorXd var =
      (draws.colwise() - mean).rowwise().squaredNorm() / double(n - 1);
  int mean_ok = 0;
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    CHECK(var[i] >= 0.94);
    CHECK(var[i] <= 1.06);
    if (std::abs(mean[i]) <= 4.0 / std::sqrt(static_cast<double>(n))) ++mean_ok;
  }
  CHECK(mean_ok >= static_cast<int>(0.99 * static_cast<double>(draws.rows())));
}

TEST_CASE("constant-mode projection variance matches the analytic value") {
  auto root = field::PrecisionRoot::build(grid(8, 0.1, 1.0));
  Rng rng(31337);
  const Eigen::Index n = 10000;
  Eigen::MatrixXd draws = root.sample(n, rng);
  Eigen::VectorXd unit_ones =
      Eigen::VectorXd::Ones(root.dim()) / std::sqrt(double(root.dim()));
  Eigen::VectorXd coeffs = draws.transpose() * unit_ones;
  double var = coeffs.squaredNorm() / double(n) -
               std::pow(coeffs.mean(), 2);
  // Var(<1/||1||, m>) = 1^T C 1 / ||1||^2 = delta^-2 since C 1 = delta^-2 1.
  CHECK(var == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("sampling is seed-deterministic") {
  auto root = field::PrecisionRoot::build(grid(6, 0.2, 1.5));
  Rng rng_a(9);
  Rng rng_b(9);
  CHECK(root.sample(5, rng_a) == root.sample(5, rng_b));
}

TEST_CASE("covariance actions compose and commute correctly") {
  auto root = field::PrecisionRoot::build(grid(10, 0.4, 1.2));
  Rng rng(12);
  Eigen::VectorXd x = rng.normal_matrix(root.dim(), 1);
  Eigen::VectorXd y = rng.normal_matrix(root.dim(), 1);

  // Inverse pair, square-root composition, symmetry, commutation, linearity.
  Eigen::VectorXd back = root.apply_cinv(root.apply_c(x));
  CHECK((back - x).norm() <= 1e-9 * x.norm());

  Eigen::VectorXd twice = root.apply_csqrt(root.apply_csqrt(x));
  Eigen::VectorXd direct = root.apply_c(x);
  CHECK((twice - direct).norm() <= 1e-9 * direct.norm());

  Eigen::VectorXd cx = root.apply_c(x);
  Eigen::VectorXd cy = root.apply_c(y);
  double xy = cx.dot(y);
  double yx = x.dot(cy);
  CHECK(std::abs(xy - yx) <= 1e-10 * std::abs(xy));

  Eigen::VectorXd lhs = root.apply_c(root.apply_cinvsqrt(x));
  Eigen::VectorXd rhs = root.apply_csqrt(x);
  CHECK((lhs - rhs).norm() <= 1e-9 * rhs.norm());

  Eigen::VectorXd combo = root.apply_c(2.0 * x - 3.0 * y);
  Eigen::VectorXd split = 2.0 * root.apply_c(x) - 3.0 * root.apply_c(y);
  CHECK((combo - split).norm() <= 1e-10 * split.norm());
}

TEST_CASE("KLE leading eigenpair is the constant mode at delta^-2") {
  for (auto [gamma, delta] : {std::pair{0.1, 1.0}, std::pair{1.0, 5.0}}) {
    auto root = field::PrecisionRoot::build(grid(16, gamma, delta));
    Rng rng(21);
    ReducedBasis basis = field::kle(root, 6, rng);

    CHECK(std::abs(basis.eigenvalues[0] - 1.0 / (delta * delta)) <=
          1e-10 / (delta * delta));
    Eigen::VectorXd unit_ones =
        Eigen::VectorXd::Ones(root.dim()) / std::sqrt(double(root.dim()));
    double align = std::abs(basis.matrix.col(0).dot(unit_ones));
    CHECK(align == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(basis.orthogonality == ridgeline::BasisOrthogonality::Identity);

    for (Eigen::Index i = 1; i < basis.eigenvalues.size(); ++i) {
      CHECK(basis.eigenvalues[i] <= basis.eigenvalues[i - 1] + 1e-14);
    }
  }
}

TEST_CASE("KLE with gamma=0 returns a flat spectrum") {
  auto root = field::PrecisionRoot::build(grid(6, 0.0, 2.0));
  Rng rng(77);
  ReducedBasis basis = field::kle(root, 5, rng);
  for (Eigen::Index i = 0; i < 5; ++i) {
    CHECK(basis.eigenvalues[i] == doctest::Approx(0.25).epsilon(1e-10));
  }
}

TEST_CASE("KLE eigenvalues match the dense oracle on 8x8") {
  field::FieldConfig cfg = grid(8, 0.1, 1.0);
  auto root = field::PrecisionRoot::build(cfg);
  Rng rng(5);
  ReducedBasis basis = field::kle(root, 10, rng);

  Eigen::MatrixXd a = Eigen::MatrixXd(root.matrix());
  Eigen::MatrixXd c = (a * a).inverse();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (c + c.transpose()));
  Eigen::VectorXd oracle = es.eigenvalues().reverse().head(10);
  for (Eigen::Index i = 0; i < 10; ++i) {
    CHECK(std::abs(basis.eigenvalues[i] - oracle[i]) <= 1e-8 * oracle[i]);
  }

  Eigen::MatrixXd gram = basis.matrix.transpose() * basis.matrix;
  CHECK((gram - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() <=
        1e-10);
}

TEST_CASE("rank-r KLE representation error equals the trailing eigenvalue sum") {
  field::FieldConfig cfg = grid(8, 0.1, 1.0);
  auto root = field::PrecisionRoot::build(cfg);
  const Eigen::Index r = 10;
  Rng basis_rng(5);
  ReducedBasis basis = field::kle(root, r, basis_rng);

  Eigen::MatrixXd a = Eigen::MatrixXd(root.matrix());
  Eigen::MatrixXd c = (a * a).inverse();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (c + c.transpose()));
  Eigen::VectorXd all = es.eigenvalues().reverse();
  double trailing = all.tail(all.size() - r).sum();

  Rng sample_rng(606);
  const Eigen::Index n = 10000;
  Eigen::MatrixXd draws = root.sample(n, sample_rng);
  Eigen::MatrixXd residuals =
      draws - basis.matrix * (basis.matrix.transpose() * draws);
  Eigen::VectorXd sq = residuals.colwise().squaredNorm();
  double mean = sq.mean();
  double se = std::sqrt((sq.array() - mean).square().sum() /
                        double(n - 1) / double(n));
  CHECK(std::abs(mean - trailing) <= 3.0 * se);
}

TEST_CASE("build rejects degenerate grids") {
  field::FieldConfig cfg = grid(1, 0.1, 1.0);
  CHECK_THROWS_AS(field::PrecisionRoot::build(cfg), Error);
}
