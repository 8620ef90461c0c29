#include "ridgeline/gaussianfield.hpp"
#include "ridgeline/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

using ridgeline::Rng;
namespace field = ridgeline::field;

field::PrecisionRoot grid_root(Eigen::Index n) {
  field::FieldConfig fc;
  fc.nx = n;
  fc.ny = n;
  return field::PrecisionRoot::build(fc);
}

void BM_FieldSample(benchmark::State& state) {
  const field::PrecisionRoot root = grid_root(state.range(0));
  for (auto _ : state) {
    Rng rng(3);
    benchmark::DoNotOptimize(root.sample(16, rng));
  }
}
BENCHMARK(BM_FieldSample)->Arg(16)->Arg(32)->Arg(64);

void BM_ApplyCsqrt(benchmark::State& state) {
  const field::PrecisionRoot root = grid_root(state.range(0));
  Rng rng(5);
  const Eigen::MatrixXd x = rng.normal_matrix(root.dim(), 16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(root.apply_csqrt(x));
  }
}
BENCHMARK(BM_ApplyCsqrt)->Arg(32)->Arg(64);

void BM_Kle(benchmark::State& state) {
  const field::PrecisionRoot root = grid_root(state.range(0));
  for (auto _ : state) {
    Rng rng(9);
    benchmark::DoNotOptimize(field::kle(root, 16, rng));
  }
}
BENCHMARK(BM_Kle)->Arg(16)->Arg(32);

}  // namespace
