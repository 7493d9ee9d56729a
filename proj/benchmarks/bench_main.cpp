#include "spsim/cavity_optics.hpp"
#include "spsim/fdtd1d.hpp"
#include "spsim/hbt.hpp"
#include "spsim/photon_source.hpp"

#include <benchmark/benchmark.h>

using namespace spsim;

namespace {

const optics::LayerStack& reference_stack() {
  static const auto s = optics::build_micropost_stack({});
  return s;
}

void BM_TmmReflectance(benchmark::State& state) {
  const auto& s = reference_stack();
  double l = 950.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(optics::reflectance(s, l));
    l += 1e-3;
  }
}
BENCHMARK(BM_TmmReflectance);

void BM_TmmSpectrum(benchmark::State& state) {
  const auto& s = reference_stack();
  for (auto _ : state) {
    auto sp = optics::reflectance_spectrum(s, 850.0, 1050.0, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(sp.reflectance.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TmmSpectrum)->Arg(2001)->Arg(20001)->Unit(benchmark::kMillisecond);

void BM_FdtdStep(benchmark::State& state) {
  const auto grid = fdtd::discretize_stack(reference_stack(), 2.0);
  fdtd::Solver solver(grid);
  solver.inject(grid.size() / 2, 1.0);
  for (auto _ : state) solver.step();
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}
BENCHMARK(BM_FdtdStep);

void BM_SourceMonteCarlo(benchmark::State& state) {
  source::PulseTrain train{source::kDefaultPeriodNs, static_cast<std::uint64_t>(state.range(0))};
  source::EmissionModel emission;
  emission.p2 = 0.005;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto s = source::run_source(train, {}, emission, seed++, {1});
    benchmark::DoNotOptimize(s.photons.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SourceMonteCarlo)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_Correlate(benchmark::State& state) {
  source::PulseTrain train{source::kDefaultPeriodNs, 1'000'000};
  source::EmissionModel emission;
  emission.p2 = 0.005;
  const auto stream = source::run_source(train, {}, emission, 7, {1});
  hbt::DetectorModel det;
  det.efficiency = 0.25;
  det.dead_time_ns = 0.0;
  const auto clicks = hbt::beamsplit_and_detect(stream, det, det, 8, {1});
  hbt::HistogramSpec spec;
  spec.correlator = state.range(0) ? hbt::Correlator::AllPairs : hbt::Correlator::Tac;
  for (auto _ : state) {
    auto h = hbt::correlate(clicks.detector1, clicks.detector2, spec);
    benchmark::DoNotOptimize(h.counts.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(clicks.detector1.size() + clicks.detector2.size()));
}
BENCHMARK(BM_Correlate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
