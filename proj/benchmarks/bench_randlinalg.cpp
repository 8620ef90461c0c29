#include "ridgeline/randlinalg.hpp"
#include "ridgeline/rng.hpp"

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <cmath>

namespace {

using ridgeline::Rng;
namespace randlinalg = ridgeline::randlinalg;

Eigen::MatrixXd spd_matrix(Eigen::Index n, double ratio, Rng& rng) {
  Eigen::VectorXd lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) lambda[i] = std::pow(ratio, double(i));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(rng.normal_matrix(n, n));
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd a = q * lambda.asDiagonal() * q.transpose();
  return ((a + a.transpose()) / 2.0).eval();
}

void BM_RandomizedEigh(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::Index k = state.range(1);
  Rng setup(7);
  const Eigen::MatrixXd a = spd_matrix(n, 0.5, setup);
  const randlinalg::SymmetricOperator op = randlinalg::SymmetricOperator::from_matrix(a);
  for (auto _ : state) {
    Rng rng(11);
    benchmark::DoNotOptimize(randlinalg::randomized_eigh(op, k, 5, 2, rng));
  }
}
BENCHMARK(BM_RandomizedEigh)->Args({100, 8})->Args({400, 16})->Args({1000, 32});

void BM_JacobiEigh(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  Rng setup(7);
  const Eigen::MatrixXd a = spd_matrix(n, 0.9, setup);
  for (auto _ : state) {
    benchmark::DoNotOptimize(randlinalg::jacobi_eigh(a));
  }
}
BENCHMARK(BM_JacobiEigh)->Arg(50)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
