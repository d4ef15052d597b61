#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "igbeat/backbone.hpp"

namespace {

using namespace igbeat;

std::vector<double> intervals(std::size_t n) {
  Rng rng(11);
  std::uniform_real_distribution<double> u(0.6, 1.2);
  std::vector<double> x(n);
  for (double& v : x) v = u(rng);
  return x;
}

void BM_Forward(benchmark::State& state) {
  model::BackboneConfig cfg;
  cfg.variant = model::kAllVariants[state.range(0)];
  Rng rng(3);
  auto params = model::ModelParameters::initialize(cfg, rng);
  const auto x = intervals(static_cast<std::size_t>(state.range(1)) + 1);
  for (auto _ : state) benchmark::DoNotOptimize(model::forward(x, params, cfg));
  state.SetLabel(std::string(model::variant_name(cfg.variant)));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_LossAndGradient(benchmark::State& state) {
  model::BackboneConfig cfg;
  cfg.variant = model::kAllVariants[state.range(0)];
  Rng rng(3);
  auto params = model::ModelParameters::initialize(cfg, rng);
  const auto x = intervals(static_cast<std::size_t>(state.range(1)) + 1);
  for (auto _ : state) {
    params.clear_grads();
    benchmark::DoNotOptimize(model::loss_and_gradient(x, params, cfg));
  }
  state.SetLabel(std::string(model::variant_name(cfg.variant)));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

}  // namespace

BENCHMARK(BM_Forward)->ArgsProduct({{0, 1, 2, 3}, {600}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossAndGradient)->ArgsProduct({{0, 1, 2, 3}, {600}})->Unit(benchmark::kMillisecond);
