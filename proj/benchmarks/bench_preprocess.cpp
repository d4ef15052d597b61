#include <benchmark/benchmark.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "igbeat/preprocess.hpp"
#include "igbeat/synth.hpp"

namespace {

using namespace igbeat;

// Five minutes of 128 Hz ECG at 20 dB.
EcgRecord five_minutes() {
  Rng rng(9);
  auto rr = synth::generate_rr(synth::ParamTrajectory::constant(0.85, 0.04), 360, rng);
  return synth::generate_ecg(rr.series.peak_times, 128.0, 20.0, rng);
}

void BM_PanTompkins(benchmark::State& state) {
  const EcgRecord ecg = five_minutes();
  for (auto _ : state) benchmark::DoNotOptimize(preprocess::detect_rpeaks(ecg));
  state.SetItemsProcessed(state.iterations() * ecg.samples.size());
}

void BM_Pchip(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> kx(n), ky(n), q(10 * n);
  std::iota(kx.begin(), kx.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) ky[i] = 0.8 + 0.1 * std::sin(0.3 * static_cast<double>(i));
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = 0.1 * static_cast<double>(i) * (n - 1) / n;
  for (auto _ : state) benchmark::DoNotOptimize(preprocess::pchip_eval(kx, ky, q));
}

}  // namespace

BENCHMARK(BM_PanTompkins)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Pchip)->Arg(100)->Arg(3000);
