#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "igbeat/eval.hpp"
#include "igbeat/igdist.hpp"

namespace {

using namespace igbeat;

void BM_Cdf(benchmark::State& state) {
  Rng rng(5);
  std::uniform_real_distribution<double> mu(0.3, 2.0), sd(0.0111, 2.118), x(0.2, 3.0);
  std::vector<std::pair<double, ig::IGParams>> points;
  for (int i = 0; i < 1024; ++i) points.push_back({x(rng), {mu(rng), sd(rng)}});
  for (auto _ : state) {
    double acc = 0.0;
    for (const auto& [xi, p] : points) acc += ig::cdf(xi, p);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * points.size());
}

void BM_Sample(benchmark::State& state) {
  Rng rng(5);
  const ig::IGParams p{0.8, 0.05};
  for (auto _ : state) benchmark::DoNotOptimize(ig::sample(p, rng));
}

void BM_RescaleAndKs(benchmark::State& state) {
  Rng rng(5);
  ig::IGTrajectory traj;
  const auto n = static_cast<std::size_t>(state.range(0));
  for (std::size_t i = 0; i < n; ++i) {
    const ig::IGParams p{0.8, 0.05};
    traj.params.push_back(p);
    traj.targets.push_back(ig::sample(p, rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(eval::ks_distance(eval::rescale(traj)));
}

}  // namespace

BENCHMARK(BM_Cdf);
BENCHMARK(BM_Sample);
BENCHMARK(BM_RescaleAndKs)->Arg(600)->Arg(1800);
