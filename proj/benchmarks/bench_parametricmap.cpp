#include "ridgeline/gaussianfield.hpp"
#include "ridgeline/parametricmap.hpp"
#include "ridgeline/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

using ridgeline::Rng;
namespace field = ridgeline::field;
namespace maps = ridgeline::maps;

/// Nonlinear solve on a fresh field draw each iteration (the sample pool is
/// larger than the map's state cache, so nothing is reused).
void BM_CrdSolve(benchmark::State& state) {
  maps::CrdConfig cfg;
  cfg.nx = state.range(0);
  cfg.ny = state.range(0);
  maps::CrdMap map(cfg);
  field::FieldConfig fc;
  fc.nx = cfg.nx;
  fc.ny = cfg.ny;
  const field::PrecisionRoot root = field::PrecisionRoot::build(fc);
  Rng rng(3);
  const Eigen::MatrixXd pool = 0.3 * root.sample(32, rng);
  Eigen::Index i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(map.evaluate(pool.col(i)));
    i = (i + 1) % pool.cols();
  }
}
BENCHMARK(BM_CrdSolve)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

/// Linearized sensitivity solve at a cached state (the dominant cost of
/// Jacobian sampling once the forward solve is warm).
void BM_CrdJacobianAction(benchmark::State& state) {
  maps::CrdConfig cfg;
  cfg.nx = state.range(0);
  cfg.ny = state.range(0);
  maps::CrdMap map(cfg);
  field::FieldConfig fc;
  fc.nx = cfg.nx;
  fc.ny = cfg.ny;
  const field::PrecisionRoot root = field::PrecisionRoot::build(fc);
  Rng rng(4);
  const Eigen::VectorXd m = 0.3 * root.sample(1, rng).col(0);
  const Eigen::MatrixXd directions = rng.normal_matrix(map.input_dim(), 8);
  benchmark::DoNotOptimize(map.evaluate(m));  // warm the state cache
  Eigen::Index i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(map.jacobian_action(m, directions.col(i)));
    i = (i + 1) % directions.cols();
  }
}
BENCHMARK(BM_CrdJacobianAction)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_CrdJacobianTransposeBlock(benchmark::State& state) {
  maps::CrdConfig cfg;
  cfg.nx = state.range(0);
  cfg.ny = state.range(0);
  maps::CrdMap map(cfg);
  field::FieldConfig fc;
  fc.nx = cfg.nx;
  fc.ny = cfg.ny;
  const field::PrecisionRoot root = field::PrecisionRoot::build(fc);
  Rng rng(5);
  const Eigen::VectorXd m = 0.3 * root.sample(1, rng).col(0);
  const Eigen::MatrixXd w = rng.normal_matrix(map.output_dim(), 16);
  benchmark::DoNotOptimize(map.evaluate(m));
  for (auto _ : state) {
    benchmark::DoNotOptimize(map.jacobian_transpose_action(m, w));
  }
}
BENCHMARK(BM_CrdJacobianTransposeBlock)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
