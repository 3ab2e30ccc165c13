#include <array>
#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "dastrack/picker.hpp"
#include "dastrack/preprocess.hpp"
#include "dastrack/simulator.hpp"
#include "dastrack/tracker.hpp"
#include "dastrack/tuner.hpp"

namespace {

using namespace dastrack;

/// 6 s of 2 kHz raw strain over 64 channels: mixed tones, deterministic.
StrainBatch make_raw_batch() {
  StrainBatch raw;
  raw.meta.n_channels = 64;
  raw.meta.n_samples = 12000;
  raw.meta.sample_interval = 5e-4;
  raw.meta.channel_spacing = 1.02;
  raw.meta.channel0_position = 3963.0;
  raw.values.resize(raw.meta.n_samples * raw.meta.n_channels);
  for (std::size_t s = 0; s < raw.meta.n_samples; ++s) {
    const double t = static_cast<double>(s) * raw.meta.sample_interval;
    for (std::size_t c = 0; c < raw.meta.n_channels; ++c) {
      raw.at(s, c) = static_cast<float>(1e-3 * std::sin(2.0 * 3.14159265358979 * 60.0 * t +
                                                        0.37 * static_cast<double>(c)) +
                                        2e-4 * std::sin(2.0 * 3.14159265358979 * 7.0 * t));
    }
  }
  return raw;
}

void BM_LogRmsPipeline(benchmark::State& state) {
  const StrainBatch raw = make_raw_batch();
  const PreprocessConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_rms_pipeline(raw, cfg));
  }
}
BENCHMARK(BM_LogRmsPipeline)->Unit(benchmark::kMillisecond);

void BM_Dbscan(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  rng::Engine eng(42);
  std::vector<std::array<double, 2>> points(n);
  for (std::array<double, 2>& p : points) {
    const double cx = 0.1 + 0.8 * std::floor(eng.uniform01() * 5.0) / 5.0;
    const double cy = 0.1 + 0.8 * std::floor(eng.uniform01() * 5.0) / 5.0;
    p = {cx + 0.01 * eng.normal(), cy + 0.01 * eng.normal()};
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(dbscan(points, 0.05, 1));
  }
}
BENCHMARK(BM_Dbscan)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_TrackerRun(benchmark::State& state) {
  Scenario scn;
  scn.seed = 7;
  scn.duration = 60.0;
  scn.objects = {
      {0.0, EntrySide::low, 10.0, ObjectClass::car, {}},
      {10.0, EntrySide::high, 12.0, ObjectClass::car, {}},
      {20.0, EntrySide::low, 8.0, ObjectClass::train, {}},
  };
  const std::vector<Pick> picks = simulate_picks(scn).flatten();
  const TrackerConfig cfg;
  const ClassModel model;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_tracker(picks, cfg, model, 0.0, scn.duration));
  }
}
BENCHMARK(BM_TrackerRun)->Unit(benchmark::kMillisecond);

void BM_Hausdorff(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  rng::Engine eng(9);
  std::vector<double> p(n), e(n);
  for (double& x : p) x = eng.uniform01() * 1000.0;
  for (double& x : e) x = eng.uniform01() * 1000.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(hausdorff(p, e));
  }
}
BENCHMARK(BM_Hausdorff)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
