#include <cstdint>
#include <numeric>
#include <vector>

#include <benchmark/benchmark.h>

#include "v2x/kernels.hpp"

using namespace v2x;
using kernels::Backend;

namespace {

std::vector<kernels::LinkPoint> grid() {
  std::vector<kernels::LinkPoint> pts;
  for (int nprb : {6, 20})
    for (int idx = 1; idx <= 4; ++idx)
      for (int s = -15; s <= 15; ++s) pts.push_back({nprb, idx, static_cast<double>(s), 0});
  return pts;
}

void BM_LinkSweep(benchmark::State& state, Backend backend) {
  const auto pts = grid();
  kernels::LinkSweepParams p;
  p.blocks_per_point = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::link_sweep(pts, p, backend));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()) * state.range(0));
}

void BM_Episodes(benchmark::State& state, Backend backend) {
  ExperimentConfig c;
  c.n_vehicles = 8;
  c.rounds = 500;
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(state.range(0)));
  std::iota(seeds.begin(), seeds.end(), 1);
  const auto catalog = risk::default_catalog();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::replicate_episodes(c, seeds, catalog, backend));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_LinkSweep, serial, Backend::Serial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_LinkSweep, openmp, Backend::OpenMP)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Episodes, serial, Backend::Serial)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Episodes, openmp, Backend::OpenMP)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
