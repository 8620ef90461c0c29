#include "ridgeline/rng.hpp"
#include "ridgeline/surrogate.hpp"

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

namespace {

using ridgeline::Rng;
namespace surrogate = ridgeline::surrogate;

/// Projected network at the experiment's working size: 33×33 input grid,
/// rank-8 subspaces, 7×7 observation grid.
surrogate::NetworkSpec working_spec(surrogate::Mode mode, Rng& rng) {
  surrogate::NetworkSpec spec;
  spec.input_dim = 33 * 33;
  spec.input_rank = 8;
  spec.output_rank = 8;
  spec.output_dim = 49;
  spec.mode = mode;
  if (mode != surrogate::Mode::FS) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(rng.normal_matrix(spec.input_dim, 8));
    spec.input_layer =
        qr.householderQ() * Eigen::MatrixXd::Identity(spec.input_dim, 8);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr_out(rng.normal_matrix(49, 8));
  spec.output_init = qr_out.householderQ() * Eigen::MatrixXd::Identity(49, 8);
  spec.output_shift = rng.normal_matrix(49, 1).col(0);
  return spec;
}

void BM_Forward(benchmark::State& state) {
  Rng rng(21);
  const surrogate::NetworkSpec spec = working_spec(surrogate::Mode::AS, rng);
  const Eigen::VectorXd w = surrogate::initialize_weights(spec, 1);
  const Eigen::MatrixXd m = rng.normal_matrix(spec.input_dim, state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(surrogate::forward(spec, w, m));
  }
}
BENCHMARK(BM_Forward)->Arg(128)->Arg(512);

void BM_LossAndGradient(benchmark::State& state) {
  const surrogate::Mode mode =
      state.range(1) == 0 ? surrogate::Mode::AS : surrogate::Mode::FS;
  Rng rng(22);
  const surrogate::NetworkSpec spec = working_spec(mode, rng);
  const Eigen::VectorXd w = surrogate::initialize_weights(spec, 2);
  const Eigen::MatrixXd m = rng.normal_matrix(spec.input_dim, state.range(0));
  const Eigen::MatrixXd q = rng.normal_matrix(spec.output_dim, state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(surrogate::loss_and_gradient(spec, w, m, q));
  }
}
BENCHMARK(BM_LossAndGradient)->Args({128, 0})->Args({512, 0})->Args({128, 1});

void BM_GaussNewtonHvp(benchmark::State& state) {
  Rng rng(23);
  const surrogate::NetworkSpec spec = working_spec(surrogate::Mode::AS, rng);
  const Eigen::VectorXd w = surrogate::initialize_weights(spec, 3);
  const Eigen::MatrixXd m = rng.normal_matrix(spec.input_dim, state.range(0));
  const Eigen::MatrixXd q = rng.normal_matrix(spec.output_dim, state.range(0));
  const Eigen::VectorXd v = rng.normal_matrix(spec.d_w(), 1).col(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(surrogate::gauss_newton_hvp(spec, w, m, q, v, 1e-3));
  }
}
BENCHMARK(BM_GaussNewtonHvp)->Arg(16)->Arg(128);

}  // namespace
