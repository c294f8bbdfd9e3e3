#include <benchmark/benchmark.h>

#include "rmtfolio/allocation.hpp"
#include "rmtfolio/market_model.hpp"
#include "rmtfolio/rmt_denoise.hpp"
#include "rmtfolio/robust_estimation.hpp"

using namespace rmtfolio;

namespace {

Matrix panel(Eigen::Index m, std::uint64_t seed = 1) {
  market::FactorModelSpec spec;
  spec.m = m;
  spec.n = 10 * m;
  spec.seed = seed;
  return market::gen_panel(spec).returns;
}

void BM_Tyler(benchmark::State& state) {
  const Matrix r = panel(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(robust::tyler(r));
}
BENCHMARK(BM_Tyler)->Arg(25)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_CleanCovariance(benchmark::State& state) {
  const Matrix r = panel(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rmt::clean_covariance(r));
}
BENCHMARK(BM_CleanCovariance)->Arg(25)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_MaximizeVariety(benchmark::State& state) {
  const alloc::CovarianceInput cov(rmt::clean_covariance(panel(state.range(0))).denoised);
  for (auto _ : state) benchmark::DoNotOptimize(alloc::maximize_variety(cov));
}
BENCHMARK(BM_MaximizeVariety)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Toeplitzify(benchmark::State& state) {
  const Matrix c = robust::tyler(panel(state.range(0))).values();
  for (auto _ : state) benchmark::DoNotOptimize(robust::toeplitzify(c));
}
BENCHMARK(BM_Toeplitzify)->Arg(100)->Arg(400);

}  // namespace
BENCHMARK_MAIN();
