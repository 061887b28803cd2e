// Serial reference kernels vs their OpenMP versions.

#include <benchmark/benchmark.h>

#include "jmcover/coverage.hpp"
#include "jmcover/montecarlo.hpp"
#include "jmcover/tessellation.hpp"

using namespace jmcover;

namespace {

GrowthConfiguration growth_sample(double rho) {
  GrowthConfiguration g;
  g.seeds = sample_spacetime_poisson(Window::unit_square(), rho, initial_horizon(Window::unit_square(), rho),
                                     RngSpec{17, 0});
  return g;
}

void BM_GridOracleSerial(benchmark::State& st) {
  const auto g = growth_sample(static_cast<double>(st.range(0)));
  const OracleField f = OracleField::jm(g);
  for (auto _ : st) benchmark::DoNotOptimize(grid_oracle_max_serial(f, Window::unit_square(), 1.0 / 512));
}

void BM_GridOracleParallel(benchmark::State& st) {
  const auto g = growth_sample(static_cast<double>(st.range(0)));
  const OracleField f = OracleField::jm(g);
  for (auto _ : st) benchmark::DoNotOptimize(grid_oracle_max(f, Window::unit_square(), 1.0 / 512));
}

void BM_RasterSerial(benchmark::State& st) {
  const auto g = growth_sample(static_cast<double>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(assign_cells_serial(Window::unit_square(), g.seeds, CellMode::jm, 512));
}

void BM_RasterParallel(benchmark::State& st) {
  const auto g = growth_sample(static_cast<double>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(assign_cells(Window::unit_square(), g.seeds, CellMode::jm, 512));
}

ExperimentConfig replication_config(double rho) {
  ExperimentConfig c;
  c.scales = {rho};
  c.replications = 64;
  return c;
}

void BM_ReplicationsSerial(benchmark::State& st) {
  const auto c = replication_config(static_cast<double>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(run_replications(c, 0, nullptr, false));
}

void BM_ReplicationsParallel(benchmark::State& st) {
  const auto c = replication_config(static_cast<double>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(run_replications(c, 0, nullptr, true));
}

}  // namespace

BENCHMARK(BM_GridOracleSerial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GridOracleParallel)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_RasterSerial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_RasterParallel)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ReplicationsSerial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ReplicationsParallel)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
