// Serial reference vs OpenMP kernel, pairwise: BM_<kernel>/serial and BM_<kernel>/parallel.

#include <benchmark/benchmark.h>

#include <vector>

#include "../tests/roundtrip.hpp"
#include "nfmem/decoherence.hpp"
#include "nfmem/eit.hpp"
#include "nfmem/fitkit.hpp"
#include "nfmem/propagation.hpp"
#include "nfmem/scenario.hpp"
#include "nfmem/waveguide.hpp"

using namespace nfmem;

namespace {

std::vector<double> diameters() {
  std::vector<double> d;
  for (double x = 250e-9; x <= 800e-9 + 1e-15; x += 1e-9) d.push_back(x);
  return d;
}

void BM_scan_serial(benchmark::State& s) {
  const auto d = diameters();
  for (auto _ : s) benchmark::DoNotOptimize(waveguide::serial::surface_intensity_scan(852e-9, d, 1e-9));
}
void BM_scan_parallel(benchmark::State& s) {
  const auto d = diameters();
  for (auto _ : s) benchmark::DoNotOptimize(waveguide::surface_intensity_scan(852e-9, d, 1e-9));
}

std::vector<double> detunings() {
  std::vector<double> d;
  for (int i = -100000; i <= 100000; ++i) d.push_back(i * 300.0 * constants::two_pi);
  return d;
}

eit::LambdaScheme scheme() {
  eit::LambdaScheme s;
  s.gamma_gs_rad_per_s = 2e5;
  s.control_dephasing_s = 1.2e-9;
  return s;
}

void BM_spectrum_serial(benchmark::State& s) {
  const auto d = detunings();
  for (auto _ : s) benchmark::DoNotOptimize(eit::serial::eit_spectrum(3.0, scheme(), 7e7, d));
}
void BM_spectrum_parallel(benchmark::State& s) {
  const auto d = detunings();
  for (auto _ : s) benchmark::DoNotOptimize(eit::eit_spectrum(3.0, scheme(), 7e7, d));
}

std::vector<double> times() {
  std::vector<double> t;
  for (int i = 0; i <= 150000; ++i) t.push_back(i * 1e-10);
  return t;
}

void BM_revival_serial(benchmark::State& s) {
  const auto t = times();
  for (auto _ : s) {
    benchmark::DoNotOptimize(decoherence::serial::revival_envelope(
        t, decoherence::MagneticScenario{}, decoherence::DecoherenceParams{}));
  }
}
void BM_revival_parallel(benchmark::State& s) {
  const auto t = times();
  for (auto _ : s) {
    benchmark::DoNotOptimize(decoherence::revival_envelope(t, decoherence::MagneticScenario{},
                                                           decoherence::DecoherenceParams{}));
  }
}

std::vector<propagation::PropagationCase> od_sweep() {
  const auto cfg = scenario::default_config("fig3b");
  const auto cal = scenario::calibration_from(cfg);
  std::vector<propagation::PropagationCase> cases;
  for (int od = 1; od <= 8; ++od) {
    auto c = scenario::case_from(cfg, cal, true);
    c.medium.od = od;
    cases.push_back(c);
  }
  return cases;
}

void BM_propagate_serial(benchmark::State& s) {
  const auto cases = od_sweep();
  for (auto _ : s) benchmark::DoNotOptimize(propagation::serial::propagate_batch(cases));
}
void BM_propagate_parallel(benchmark::State& s) {
  const auto cases = od_sweep();
  for (auto _ : s) benchmark::DoNotOptimize(propagation::propagate_batch(cases));
}

std::vector<fitkit::FitProblem> fit_restarts() {
  std::vector<fitkit::FitProblem> p;
  for (const auto& t : roundtrip::operating_points()) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) p.push_back(roundtrip::synthetic(t, seed, 0.01));
  }
  return p;
}

void BM_fit_serial(benchmark::State& s) {
  const auto p = fit_restarts();
  for (auto _ : s) benchmark::DoNotOptimize(fitkit::serial::fit_batch(p));
}
void BM_fit_parallel(benchmark::State& s) {
  const auto p = fit_restarts();
  for (auto _ : s) benchmark::DoNotOptimize(fitkit::fit_batch(p));
}

}  // namespace

BENCHMARK(BM_scan_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_scan_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_spectrum_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_spectrum_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_revival_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_revival_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_propagate_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_propagate_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_fit_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_fit_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
