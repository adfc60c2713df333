// Serial reference against the OpenMP kernels.

#include <benchmark/benchmark.h>

#include <memory>

#include "ddim/dimension.hpp"
#include "ddim/spectral.hpp"
#include "ddim/suarez.hpp"

namespace {

using namespace ddim;

std::shared_ptr<const Trajectory> orbit(int m) {
  const SuarezModel s(0.5, 1.0);
  const HistoryGrid g(1.0, m);
  return std::make_shared<const Trajectory>(
      evolve(s.model(), HState::embed(g, random_segment(1.0, 1.2, 1)), g, 0.0, 2.0, 1.0 / m));
}

void quasi_differential_bench(benchmark::State& state, Exec exec) {
  const auto base = orbit(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(quasi_differential(base, 2.0, 0.0, exec).matrix.data());
}

void region_bench(benchmark::State& state, Exec exec) {
  const int res = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(region_sweep({0.0, 3.0}, {0.0, 1.0}, res, exec).cells.data());
}

void squeeze_bench(benchmark::State& state, Exec exec) {
  const SuarezModel s(0.5, 1.0);
  const HistoryGrid g(1.0, 16);
  const Trajectory tr = evolve(s.model(), HState::embed(g, random_segment(1.0, 1.0, 2)), g, 0.0, 40.0, 1.0 / 16);
  std::vector<HState> samples;
  for (int i = 0; i < static_cast<int>(state.range(0)); ++i) samples.push_back(tr.state_at(20.0 + i));
  for (auto _ : state) benchmark::DoNotOptimize(squeezing_test(s.model(), samples, g, 2.0, 1.0 / 16, 1.0, 0.05, exec));
}

}  // namespace

BENCHMARK_CAPTURE(quasi_differential_bench, serial, Exec::Serial)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(quasi_differential_bench, parallel, Exec::Parallel)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(region_bench, serial, Exec::Serial)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(region_bench, parallel, Exec::Parallel)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(squeeze_bench, serial, Exec::Serial)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(squeeze_bench, parallel, Exec::Parallel)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
