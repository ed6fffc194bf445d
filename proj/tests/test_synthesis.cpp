#include "nvhet/synthesis.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nvhet/analysis.hpp"
#include "nvhet/errors.hpp"
#include "nvhet/physics.hpp"
#include "nvhet/trace_io.hpp"

using namespace nvhet;

namespace {

const ensemble_params bench{};
const physical_constants consts{};

drive_scenario bench_scenario(double duration) {
  drive_scenario s;
  const double f0 = physical_constants{}.zero_field_splitting_hz;
  s.tones = {{2.2e-7, f0, 0.0}, {3.66e-8, f0 + 480.0, 0.0}};
  s.laser_power_w = kBenchLaserPowerW;
  s.duration_s = duration;
  return s;
}

}  // namespace

TEST_CASE("noise budget at the bench point") {
  const auto b = budget_at(bench_scenario(1.0), bench, consts, detector_model{}, 76.394373);
  CHECK(b.mean_rate_hz == doctest::Approx(1.41122157e15).epsilon(1e-3));
  CHECK(b.mean_volts == doctest::Approx(1.41122157).epsilon(1e-3));
  CHECK(b.shot_psd_v2_hz == doctest::Approx(2.82244314e-15).epsilon(1e-3));
  CHECK(b.electronic_psd_v2_hz == doctest::Approx(1e-16).epsilon(1e-12));
  CHECK(b.laser_psd_v2_hz == 0.0);  // default detector carries no laser noise
  CHECK(b.total_psd_v2_hz ==
        doctest::Approx(b.shot_psd_v2_hz + b.electronic_psd_v2_hz).epsilon(1e-12));

  detector_model noisy;
  noisy.laser_noise_fraction = 1e-7;
  const auto lo = budget_at(bench_scenario(1.0), bench, consts, noisy, 10.0);
  const auto hi = budget_at(bench_scenario(1.0), bench, consts, noisy, 1000.0);
  CHECK(lo.laser_psd_v2_hz > hi.laser_psd_v2_hz);  // corner rolls the psd off
  const double w_ratio = (1.0 + 1000.0 / 100.0) / (1.0 + 10.0 / 100.0);
  CHECK(lo.laser_psd_v2_hz / hi.laser_psd_v2_hz ==
        doctest::Approx(w_ratio).epsilon(1e-9));
}

TEST_CASE("laser noise calibration hits the requested sensitivity floor") {
  const auto scenario = bench_scenario(1.0);
  const double frac = calibrate_noise(detector_model{}, scenario, bench, consts, 8.9e-12);
  CHECK(frac == doctest::Approx(1.59992637e-8).epsilon(0.02));

  // targets below the shot + electronic floor are unreachable
  CHECK_THROWS_AS(calibrate_noise(detector_model{}, scenario, bench, consts, 8.0e-12),
                  numeric_error);
  CHECK_THROWS_AS(calibrate_noise(detector_model{}, scenario, bench, consts, 1e-13),
                  numeric_error);
}

TEST_CASE("synthesis is deterministic in the seed") {
  const auto s = bench_scenario(4.0);
  const auto a = synthesize_trace(s, bench, consts, detector_model{}, 42);
  const auto b = synthesize_trace(s, bench, consts, detector_model{}, 42);
  REQUIRE(a.volts.size() == b.volts.size());
  CHECK(std::memcmp(a.volts.data(), b.volts.data(), a.volts.size() * sizeof(double)) == 0);

  const auto c = synthesize_trace(s, bench, consts, detector_model{}, 43);
  size_t differing = 0;
  for (size_t i = 0; i < a.volts.size(); ++i)
    if (a.volts[i] != c.volts[i]) ++differing;
  CHECK(differing > a.volts.size() / 2);
  CHECK(a.seed == 42);
  CHECK(a.sample_rate_hz == 2000.0);
  CHECK(a.volts.size() == 8000);
}

TEST_CASE("noiseless trace carries the beat at the predicted voltage amplitude") {
  const auto s = bench_scenario(4.0);
  const noise_toggles off{false, false, false};
  const auto tr = synthesize_trace(s, bench, consts, detector_model{}, 1, off);

  double mean = 0.0;
  for (double v : tr.volts) mean += v;
  mean /= static_cast<double>(tr.volts.size());
  CHECK(mean == doctest::Approx(1.41122157).epsilon(1e-3));

  // beat voltage = vppr * contrast * n k gamma_p * population amplitude
  const double gamma_sig =
      induced_relaxation(drive_rate(3.66e-8, consts), bench.gamma2_hz);
  const auto resp = heterodyne_amplitude(204.0, 102.0, 78.894099, gamma_sig, 480.0);
  const double v_beat = 1e-15 * 2.8e13 * 0.25 * 204.0 * 0.05 * resp.amplitude;
  const auto zoom = zoom_amplitude_spectrum(tr, beat_cycle_hz(480.0), 2.0, 3);
  CHECK(zoom.amplitude[1] == doctest::Approx(v_beat).epsilon(0.01));
}

TEST_CASE("shot-only noise floor matches the budget") {
  auto s = bench_scenario(8.192);
  const noise_toggles shot_only{true, false, false};
  const auto tr = synthesize_trace(s, bench, consts, detector_model{}, 7, shot_only);
  const auto spec = amplitude_spectrum(tr, window_kind::hann);
  const auto b = budget_at(s, bench, consts, detector_model{}, 400.0);

  // quiet span well away from the beat line
  double ss = 0.0;
  size_t cnt = 0;
  for (size_t k = 0; k < spec.amplitude.size(); ++k) {
    if (spec.frequency_hz[k] < 300.0 || spec.frequency_hz[k] > 900.0) continue;
    ss += spec.amplitude[k] * spec.amplitude[k];
    ++cnt;
  }
  REQUIRE(cnt > 1000);
  const double rms = std::sqrt(ss / static_cast<double>(cnt));
  const double expected =
      std::sqrt(2.0 * b.shot_psd_v2_hz * kSensitivityEnbw / tr.duration_s());
  CHECK(rms == doctest::Approx(expected).epsilon(0.10));
}

TEST_CASE("electronic-only noise floor matches the budget") {
  auto s = bench_scenario(8.192);
  const noise_toggles elec_only{false, false, true};
  detector_model det;
  det.volts_per_photon_rate = 1e-15;
  const auto tr = synthesize_trace(s, bench, consts, det, 7, elec_only);

  // remove the deterministic beat by differencing against the noiseless trace
  const auto clean = synthesize_trace(s, bench, consts, det, 7, {false, false, false});
  time_trace noise = tr;
  for (size_t i = 0; i < noise.volts.size(); ++i) noise.volts[i] -= clean.volts[i];

  const auto spec = amplitude_spectrum(noise, window_kind::hann);
  double ss = 0.0;
  size_t cnt = 0;
  for (size_t k = 16; k + 16 < spec.amplitude.size(); ++k) {
    ss += spec.amplitude[k] * spec.amplitude[k];
    ++cnt;
  }
  const double rms = std::sqrt(ss / static_cast<double>(cnt));
  const double expected = std::sqrt(2.0 * 1e-16 * kSensitivityEnbw / tr.duration_s());
  CHECK(rms == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("laser noise is shaped by the corner filter") {
  auto s = bench_scenario(32.768);
  detector_model det;
  det.laser_noise_fraction = 1e-6;
  const noise_toggles laser_only{false, true, false};
  const auto tr = synthesize_trace(s, bench, consts, det, 3, laser_only);
  const auto clean = synthesize_trace(s, bench, consts, det, 3, {false, false, false});
  time_trace noise = tr;
  for (size_t i = 0; i < noise.volts.size(); ++i) noise.volts[i] -= clean.volts[i];

  const auto spec = amplitude_spectrum(noise, window_kind::hann);
  auto band_psd = [&](double lo, double hi) {
    double ss = 0.0;
    size_t cnt = 0;
    for (size_t k = 1; k < spec.amplitude.size(); ++k) {
      if (spec.frequency_hz[k] < lo || spec.frequency_hz[k] > hi) continue;
      ss += spec.amplitude[k] * spec.amplitude[k];
      ++cnt;
    }
    return ss / static_cast<double>(cnt);
  };
  const double low = band_psd(10.0, 30.0);    // ~0.83 of the plateau
  const double high = band_psd(700.0, 900.0);  // ~0.11 of the plateau
  const double w20 = 1.0 / (1.0 + 20.0 / det.laser_noise_corner_hz);
  const double w800 = 1.0 / (1.0 + 800.0 / det.laser_noise_corner_hz);
  CHECK(low / high == doctest::Approx(w20 / w800).epsilon(0.30));
}

TEST_CASE("shot model refuses rates too low for the Gaussian limit") {
  ensemble_params dim = bench;
  dim.n_emitters = 1e3;
  CHECK_THROWS_AS(
      synthesize_trace(bench_scenario(1.0), dim, consts, detector_model{}, 1),
      numeric_error);
}

TEST_CASE("binary trace round trip is exact") {
  const auto s = bench_scenario(1.0);
  auto tr = synthesize_trace(s, bench, consts, detector_model{}, 99);
  tr.scenario_hash = 0xabcdef0123456789ull;
  const auto path = std::filesystem::temp_directory_path() / "nvhet_test_trace.bin";
  write_trace_binary(tr, path);
  const auto rt = read_trace_binary(path);
  REQUIRE(rt.volts.size() == tr.volts.size());
  CHECK(std::memcmp(rt.volts.data(), tr.volts.data(), tr.volts.size() * sizeof(double)) ==
        0);
  CHECK(rt.sample_rate_hz == tr.sample_rate_hz);
  CHECK(rt.seed == 99);
  CHECK(rt.scenario_hash == 0xabcdef0123456789ull);

  // rewriting produces byte-identical files (no timestamps anywhere)
  const auto path2 = std::filesystem::temp_directory_path() / "nvhet_test_trace2.bin";
  write_trace_binary(tr, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::stringstream b1, b2;
  b1 << f1.rdbuf();
  b2 << f2.rdbuf();
  CHECK(b1.str() == b2.str());
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
  std::filesystem::remove(path.string() + ".meta");
  std::filesystem::remove(path2.string() + ".meta");
}

TEST_CASE("csv trace round trip and corruption handling") {
  const auto s = bench_scenario(0.05);
  const auto tr = synthesize_trace(s, bench, consts, detector_model{}, 5);
  const auto path = std::filesystem::temp_directory_path() / "nvhet_test_trace.csv";
  write_trace_csv(tr, path);
  const auto rt = read_trace_csv(path);
  REQUIRE(rt.volts.size() == tr.volts.size());
  for (size_t i = 0; i < tr.volts.size(); ++i) CHECK(rt.volts[i] == tr.volts[i]);
  CHECK(rt.sample_rate_hz == doctest::Approx(2000.0).epsilon(1e-9));
  std::filesystem::remove(path);

  const auto bad = std::filesystem::temp_directory_path() / "nvhet_test_bad.bin";
  {
    std::ofstream out(bad, std::ios::binary);
    out << "not a trace at all";
  }
  CHECK_THROWS_AS(read_trace_binary(bad), io_error);
  CHECK_THROWS_AS(read_trace_csv(bad), io_error);
  std::filesystem::remove(bad);
}
