// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

// Serial vs OpenMP curve kernels, and standard vs accelerated EM.

#include <benchmark/benchmark.h>

#include <vector>

#include "bumphunt/pipeline.hpp"

using namespace bumphunt;

namespace {

const std::vector<LightCurve>& catalog() {
  static const std::vector<LightCurve> curves = [] {
    SimulationConfig sim;
    sim.seed = 99;
    std::vector<LightCurve> out;
    for (const auto& s : simulate_batch(sim, BatchCounts{48, 8, 8})) out.push_back(s.curve);
    return out;
  }();
  return curves;
}

const WaveletBasis& basis() {
  static const WaveletBasis b;
  return b;
}

void BM_FitCurvesSerial(benchmark::State& state) {
  const PipelineConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(fit_curves_serial(catalog(), basis(), config));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(catalog().size()));
}
BENCHMARK(BM_FitCurvesSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_FitCurvesParallel(benchmark::State& state) {
  const PipelineConfig config;
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_curves_parallel(catalog(), basis(), config, workers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(catalog().size()));
}
BENCHMARK(BM_FitCurvesParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_AlternativeFit(benchmark::State& state) {
  const LightCurve& curve = catalog()[50];
  const DesignMatrix d = basis().evaluate(rescale_times(curve.times, basis().spec().interval_length));
  EmOptions opt;
  opt.accelerate = state.range(0) != 0;
  int iterations = 0;
  for (auto _ : state) {
    const RobustFit fit = fit_alternative(curve, d, PriorConfig{}, opt);
    iterations = fit.iterations;
    benchmark::DoNotOptimize(fit.loglik);
  }
  state.counters["em_iterations"] = iterations;
  state.SetLabel(opt.accelerate ? "accelerated" : "standard");
}
BENCHMARK(BM_AlternativeFit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BasisEvaluate(benchmark::State& state) {
  const LightCurve& curve = catalog()[0];
  const std::vector<double> t = rescale_times(curve.times, basis().spec().interval_length);
  for (auto _ : state) benchmark::DoNotOptimize(basis().evaluate(t));
}
BENCHMARK(BM_BasisEvaluate)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
