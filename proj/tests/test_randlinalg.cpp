#include "ridgeline/randlinalg.hpp"

#include "ridgeline/errors.hpp"
#include "ridgeline/rng.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace {

using ridgeline::Error;
using ridgeline::ErrorKind;
using ridgeline::Rng;
namespace rla = ridgeline::randlinalg;

/// Random orthogonal matrix from the QR factorization of a Gaussian draw.
Eigen::MatrixXd random_orthogonal(Eigen::Index n, Rng& rng) {
  Eigen::MatrixXd g = rng.normal_matrix(n, n);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

/// SPD matrix with the given spectrum in a random orthogonal basis.
Eigen::MatrixXd spd_with_spectrum(const Eigen::VectorXd& spectrum, Rng& rng) {
  Eigen::MatrixXd q = random_orthogonal(spectrum.size(), rng);
  return q * spectrum.asDiagonal() * q.transpose();
}

double spectral_norm(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Dense top-k eigenvalues, descending, from an independent oracle.
Eigen::VectorXd dense_topk(const Eigen::MatrixXd& a, Eigen::Index k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  return es.eigenvalues().reverse().head(k);
}

bool is_config(const Error& e) { return e.kind() == ErrorKind::Config; }
bool is_numerical(const Error& e) { return e.kind() == ErrorKind::Numerical; }

}  // namespace

TEST_CASE("from_matrix rejects non-square input") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 4);
  CHECK_THROWS_AS(rla::SymmetricOperator::from_matrix(a), Error);
  try {
    rla::SymmetricOperator::from_matrix(a);
  } catch (const Error& e) {
    CHECK(is_config(e));
  }
}

TEST_CASE("jacobi_eigh matches a dense oracle on random symmetric matrices") {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index n = 6 + 7 * trial;
    Eigen::MatrixXd g = rng.normal_matrix(n, n);
    Eigen::MatrixXd a = 0.5 * (g + g.transpose());
    rla::EigResult res = rla::jacobi_eigh(a);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    Eigen::VectorXd oracle = es.eigenvalues().reverse();
    const double scale = oracle.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      CHECK(std::abs(res.eigenvalues[i] - oracle[i]) <= 1e-10 * scale);
    }
    // Eigenpair residuals and orthonormality.
    double residual =
        (a * res.vectors - res.vectors * res.eigenvalues.asDiagonal()).norm();
    CHECK(residual <= 1e-9 * scale * std::sqrt(static_cast<double>(n)));
    Eigen::MatrixXd gram = res.vectors.transpose() * res.vectors;
    CHECK((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <=
          1e-10);
  }
}

TEST_CASE("jacobi_eigh handles trivial shapes") {
  Eigen::MatrixXd one(1, 1);
  one << -3.5;
  rla::EigResult res = rla::jacobi_eigh(one);
  CHECK(res.eigenvalues[0] == -3.5);
  CHECK(res.vectors(0, 0) == 1.0);

  CHECK_THROWS_AS(rla::jacobi_eigh(Eigen::MatrixXd::Zero(2, 3)), Error);
}

TEST_CASE("randomized_eigh recovers diag(5,4,3,2,1) top-2 exactly") {
  Eigen::VectorXd d(5);
  d << 5, 4, 3, 2, 1;
  auto op = rla::SymmetricOperator::from_matrix(d.asDiagonal());
  Rng rng(7);
  rla::EigResult res = rla::randomized_eigh(op, 2, 3, 2, rng);

  REQUIRE(res.eigenvalues.size() == 2);
  CHECK(res.eigenvalues[0] == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(res.eigenvalues[1] == doctest::Approx(4.0).epsilon(1e-10));
  // Vectors are ±e1, ±e2: the dominant component carries all the mass.
  CHECK(std::abs(res.vectors(0, 0)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(res.vectors(1, 1)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.orthogonality == rla::Orthogonality::Identity);
}

TEST_CASE("randomized_eigh on the identity returns all ones") {
  const Eigen::Index n = 30;
  auto op = rla::SymmetricOperator::from_matrix(Eigen::MatrixXd::Identity(n, n));
  for (int passes : {1, 2}) {
    Rng rng(11);
    rla::EigResult res = rla::randomized_eigh(op, 7, 5, passes, rng);
    for (Eigen::Index i = 0; i < 7; ++i) {
      CHECK(res.eigenvalues[i] == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("randomized_eigh matches dense oracle on a 2^-i spectrum") {
  const Eigen::Index n = 50;
  Eigen::VectorXd spectrum(n);
  for (Eigen::Index i = 0; i < n; ++i)
    spectrum[i] = std::pow(2.0, -static_cast<double>(i));
  Rng matrix_rng(101);
  Eigen::MatrixXd a = spd_with_spectrum(spectrum, matrix_rng);

  auto op = rla::SymmetricOperator::from_matrix(a);
  Rng rng(5);
  rla::EigResult res = rla::randomized_eigh(op, 10, 5, 2, rng);

  Eigen::VectorXd oracle = dense_topk(a, 10);
  for (Eigen::Index i = 0; i < 10; ++i) {
    CHECK(std::abs(res.eigenvalues[i] - oracle[i]) <= 1e-6 * oracle[i]);
  }
  Eigen::MatrixXd gram = res.vectors.transpose() * res.vectors;
  CHECK((gram - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() <=
        1e-10);
}

TEST_CASE("randomized_eigh single-pass variant tracks geometric spectra") {
  const Eigen::Index n = 40;
  Eigen::VectorXd spectrum(n);
  for (Eigen::Index i = 0; i < n; ++i)
    spectrum[i] = std::pow(4.0, -static_cast<double>(i));
  Rng matrix_rng(77);
  Eigen::MatrixXd a = spd_with_spectrum(spectrum, matrix_rng);

  auto op = rla::SymmetricOperator::from_matrix(a);
  Rng rng(9);
  rla::EigResult res = rla::randomized_eigh(op, 5, 8, 1, rng);
  Eigen::VectorXd oracle = dense_topk(a, 5);
  // Single pass is less accurate than the power-iteration variant; the fast
  // 4^-i decay still pins the leading eigenvalues tightly.
  for (Eigen::Index i = 0; i < 5; ++i) {
    CHECK(std::abs(res.eigenvalues[i] - oracle[i]) <= 1e-4 * oracle[0]);
  }
}

TEST_CASE("randomized_eigh is deterministic for a fixed seed") {
  Rng matrix_rng(3);
  Eigen::VectorXd spectrum = Eigen::VectorXd::LinSpaced(20, 20.0, 1.0);
  Eigen::MatrixXd a = spd_with_spectrum(spectrum, matrix_rng);
  auto op = rla::SymmetricOperator::from_matrix(a);

  Rng rng_a(123);
  Rng rng_b(123);
  rla::EigResult first = rla::randomized_eigh(op, 4, 3, 2, rng_a);
  rla::EigResult second = rla::randomized_eigh(op, 4, 3, 2, rng_b);
  CHECK(first.eigenvalues == second.eigenvalues);
  CHECK(first.vectors == second.vectors);

  Rng rng_c(124);
  rla::EigResult third = rla::randomized_eigh(op, 4, 3, 2, rng_c);
  CHECK(first.vectors != third.vectors);
}

TEST_CASE("randomized_eigh validates its inputs") {
  auto op = rla::SymmetricOperator::from_matrix(Eigen::MatrixXd::Identity(6, 6));
  Rng rng(1);
  // k + p exceeding dim, p too small, bad pass count, empty operator.
  CHECK_THROWS_AS(rla::randomized_eigh(op, 5, 2, 2, rng), Error);
  CHECK_THROWS_AS(rla::randomized_eigh(op, 2, 1, 2, rng), Error);
  CHECK_THROWS_AS(rla::randomized_eigh(op, 2, 2, 3, rng), Error);
  CHECK_THROWS_AS(rla::randomized_eigh(rla::SymmetricOperator{}, 1, 2, 2, rng),
                  Error);

  rla::SymmetricOperator wrong_shape{
      6, [](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
        return Eigen::MatrixXd::Zero(3, x.cols());
      }};
  CHECK_THROWS_AS(rla::randomized_eigh(wrong_shape, 2, 2, 2, rng), Error);

  rla::SymmetricOperator poisoned{
      6, [](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
        Eigen::MatrixXd y = x;
        y(0, 0) = std::nan("");
        return y;
      }};
  try {
    rla::randomized_eigh(poisoned, 2, 2, 2, rng);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(is_numerical(e));
    CHECK(std::string(e.what()).find("probe column 0") != std::string::npos);
  }
}

TEST_CASE("reconstruction error respects the oversampling bound") {
  // On SPD matrices with a spectral gap the randomized decomposition obeys
  // ||A - V L V^T||_2 <= (1 + 4 sqrt(n(k+p))/(p-1)) |lambda_{k+1}| with high
  // probability; check 100 seeded trials and require >= 95 successes.
  const Eigen::Index n = 40;
  const Eigen::Index k = 5;
  const Eigen::Index p = 5;
  Eigen::VectorXd spectrum(n);
  for (Eigen::Index i = 0; i < n; ++i)
    spectrum[i] = std::pow(2.0, -static_cast<double>(i));
  const double bound_factor =
      1.0 + 4.0 * std::sqrt(static_cast<double>(n * (k + p))) /
                (static_cast<double>(p) - 1.0);

  int successes = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng matrix_rng(1000 + trial);
    Eigen::MatrixXd a = spd_with_spectrum(spectrum, matrix_rng);
    auto op = rla::SymmetricOperator::from_matrix(a);
    Rng rng(2000 + trial);
    rla::EigResult res = rla::randomized_eigh(op, k, p, 2, rng);
    Eigen::MatrixXd approx =
        res.vectors * res.eigenvalues.asDiagonal() * res.vectors.transpose();
    if (spectral_norm(a - approx) <= bound_factor * spectrum[k]) ++successes;
  }
  CHECK(successes >= 95);
}

TEST_CASE("generalized_eigh_via_transform handles H proportional to C^-1") {
  const Eigen::Index n = 24;
  Rng matrix_rng(55);
  Eigen::VectorXd spectrum = Eigen::VectorXd::LinSpaced(n, 3.0, 0.5);
  Eigen::MatrixXd c = spd_with_spectrum(spectrum, matrix_rng);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  Eigen::MatrixXd c_sqrt_m = es.operatorSqrt();
  Eigen::MatrixXd c_inv_m = c.inverse();

  auto c_sqrt = rla::SymmetricOperator::from_matrix(c_sqrt_m);
  auto c_inv = rla::SymmetricOperator::from_matrix(c_inv_m);

  for (double scale : {1.0, 3.0}) {
    auto h = rla::SymmetricOperator::from_matrix(scale * c_inv_m);
    Rng rng(6);
    rla::EigResult res =
        rla::generalized_eigh_via_transform(h, c_sqrt, c_inv, 4, 4, rng);
    for (Eigen::Index i = 0; i < 4; ++i) {
      CHECK(res.eigenvalues[i] == doctest::Approx(scale).epsilon(1e-9));
    }
    CHECK(res.orthogonality == rla::Orthogonality::WeightedCinv);
    Eigen::MatrixXd gram = res.vectors.transpose() * c_inv_m * res.vectors;
    CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <=
          1e-8);
  }
}

TEST_CASE("generalized_eigh_via_transform matches a dense oracle") {
  // Low-rank H = G^T G with k + p probes covering the full range makes the
  // randomized step exact, so the dense oracle must agree to round-off.
  const Eigen::Index n = 30;
  const Eigen::Index g_rows = 12;
  Rng rng_setup(99);
  Eigen::MatrixXd g = rng_setup.normal_matrix(g_rows, n);
  Eigen::MatrixXd h_m = g.transpose() * g;

  Eigen::VectorXd c_spectrum = Eigen::VectorXd::LinSpaced(n, 2.0, 0.1);
  Eigen::MatrixXd c = spd_with_spectrum(c_spectrum, rng_setup);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  Eigen::MatrixXd c_sqrt_m = es.operatorSqrt();

  auto h = rla::SymmetricOperator::from_matrix(h_m);
  auto c_sqrt = rla::SymmetricOperator::from_matrix(c_sqrt_m);
  auto c_inv = rla::SymmetricOperator::from_matrix(c.inverse());

  Rng rng(17);
  const Eigen::Index k = 10;
  rla::EigResult res =
      rla::generalized_eigh_via_transform(h, c_sqrt, c_inv, k, 5, rng);

  Eigen::MatrixXd s = c_sqrt_m * h_m * c_sqrt_m;
  Eigen::VectorXd oracle = dense_topk(0.5 * (s + s.transpose()), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    CHECK(std::abs(res.eigenvalues[i] - oracle[i]) <= 1e-6 * oracle[0]);
  }
  // Generalized eigenpair residual: H v = lambda C^-1 v.
  Eigen::MatrixXd lhs = h_m * res.vectors;
  Eigen::MatrixXd rhs =
      c.inverse() * res.vectors * res.eigenvalues.asDiagonal();
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-6 * oracle[0]);
}

TEST_CASE("generalized_eigh_via_transform rejects mismatched dims") {
  auto a = rla::SymmetricOperator::from_matrix(Eigen::MatrixXd::Identity(4, 4));
  auto b = rla::SymmetricOperator::from_matrix(Eigen::MatrixXd::Identity(5, 5));
  Rng rng(1);
  CHECK_THROWS_AS(rla::generalized_eigh_via_transform(a, b, a, 2, 2, rng),
                  Error);
}

TEST_CASE("adaptive_rank evaluates the bound formula") {
  Eigen::VectorXd d(3);
  d << 1.0, 0.1, 1e-12;
  rla::AdaptiveRankResult res = rla::adaptive_rank(d, 100, 5, 1e-6);
  CHECK(res.rank == 2);
  CHECK(res.satisfied);

  Eigen::VectorXd zeros = Eigen::VectorXd::Zero(3);
  res = rla::adaptive_rank(zeros, 100, 5, 1e-6);
  CHECK(res.rank == 0);
  CHECK(res.satisfied);

  // Tighter tolerances never decrease the selected rank; an unreachable
  // tolerance returns the full length flagged unsatisfied.
  rla::AdaptiveRankResult loose = rla::adaptive_rank(d, 100, 5, 1e-6);
  rla::AdaptiveRankResult tight = rla::adaptive_rank(d, 100, 5, 1e-30);
  CHECK(tight.rank >= loose.rank);
  CHECK(tight.rank == 3);
  CHECK_FALSE(tight.satisfied);
}

TEST_CASE("adaptive_rank validates inputs") {
  Eigen::VectorXd d(2);
  d << 1.0, 0.5;
  CHECK_THROWS_AS(rla::adaptive_rank(Eigen::VectorXd(), 10, 5, 1e-6), Error);
  CHECK_THROWS_AS(rla::adaptive_rank(d, 10, 1, 1e-6), Error);
  CHECK_THROWS_AS(rla::adaptive_rank(d, 10, 5, 0.0), Error);
}
