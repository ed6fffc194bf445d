// hot-path benchmarks: integrator, trace synthesis, spectra, fits, zoom

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "nvhet/analysis.hpp"
#include "nvhet/dynamics.hpp"
#include "nvhet/physics.hpp"
#include "nvhet/synthesis.hpp"

namespace {

using namespace nvhet;

const ensemble_params params{};
const physical_constants consts{};

drive_scenario two_tone(double duration_s) {
  drive_scenario s;
  const double f0 = consts.zero_field_splitting_hz;
  s.tones = {{2.2e-7, f0, 0.0}, {3.66e-8, f0 + 480.0, 0.0}};
  s.duration_s = duration_s;
  return s;
}

void bm_integrate(benchmark::State& state) {
  const auto scenario = two_tone(static_cast<double>(state.range(0)));
  for (auto _ : state) {
    auto traj = integrate_rate_equation(scenario, params, consts);
    benchmark::DoNotOptimize(traj.p0.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_integrate)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void bm_synthesize(benchmark::State& state) {
  const auto scenario = two_tone(static_cast<double>(state.range(0)));
  detector_model det;
  for (auto _ : state) {
    auto trace = synthesize_trace(scenario, params, consts, det, 7);
    benchmark::DoNotOptimize(trace.volts.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 2000);
}
BENCHMARK(bm_synthesize)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

time_trace noise_trace(size_t n) {
  time_trace t;
  t.sample_rate_hz = 2000.0;
  t.volts.resize(n);
  uint64_t x = 0x9e3779b97f4a7c15ULL;
  for (auto& v : t.volts) {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    v = 1e-6 * std::cos(0.24 * static_cast<double>(x >> 40));
  }
  return t;
}

void bm_spectrum(benchmark::State& state) {
  const auto trace = noise_trace(static_cast<size_t>(state.range(0)));
  for (auto _ : state) {
    auto spec = amplitude_spectrum(trace, window_kind::hann, 2);
    benchmark::DoNotOptimize(spec.amplitude.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_spectrum)->Arg(1 << 17)->Arg(1 << 21)->Unit(benchmark::kMillisecond);

void bm_zoom(benchmark::State& state) {
  time_trace t;
  t.sample_rate_hz = 2000.0;
  t.volts.resize(2'000'000);
  for (size_t i = 0; i < t.volts.size(); ++i)
    t.volts[i] = std::cos(2.0 * kPi * 76.4 * t.time_at(i));
  for (auto _ : state) {
    auto spec = zoom_amplitude_spectrum(t, 76.4, 1.0, static_cast<size_t>(state.range(0)));
    benchmark::DoNotOptimize(spec.amplitude.data());
  }
}
BENCHMARK(bm_zoom)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void bm_lorentz_fit(benchmark::State& state) {
  std::vector<double> x(801), y(801);
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] = -4e6 + 1e4 * static_cast<double>(i);
    y[i] = 1.0;
    for (double c : {-2.16e6, 0.0, 2.16e6})
      y[i] -= 0.05 / (1.0 + std::pow((x[i] - c) / 2.41e5, 2));
  }
  for (auto _ : state) {
    auto fit = lorentzian_multifit(x, y, 3);
    benchmark::DoNotOptimize(&fit.lines);
  }
}
BENCHMARK(bm_lorentz_fit)->Unit(benchmark::kMillisecond);

void bm_linewidth(benchmark::State& state) {
  time_trace t;
  t.sample_rate_hz = 2000.0;
  t.volts.resize(200'000);
  for (size_t i = 0; i < t.volts.size(); ++i)
    t.volts[i] = 1e-6 * std::cos(2.0 * kPi * 76.4 * t.time_at(i));
  for (auto _ : state) {
    auto lw = beat_linewidth(t, 76.4);
    benchmark::DoNotOptimize(&lw);
  }
}
BENCHMARK(bm_linewidth)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
