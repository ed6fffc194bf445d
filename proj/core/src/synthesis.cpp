#include "nvhet/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <vector>

#include "fft.hpp"
#include "nvhet/errors.hpp"
#include "nvhet/physics.hpp"
#include "nvhet/rng.hpp"

namespace nvhet {

namespace {

constexpr size_t kMaxSamples = 100000000;
constexpr size_t kChunk = 1 << 16;  // colored-noise synthesis chunk, samples
constexpr size_t kRngBlockSamples = 1 << 16;

double laser_weight(const detector_model& d, double f_hz) {
  return 1.0 / (1.0 + std::pow(f_hz / d.laser_noise_corner_hz, d.laser_noise_exponent));
}

double mean_drive_rate(const drive_scenario& scenario, const ensemble_params& params,
                       const physical_constants& consts) {
  // cross-tone beats average to zero, so the mean saturation is the per-tone sum
  double total = 0.0;
  for (const auto& tone : scenario.tones) {
    const auto rates = derive_rates(tone, scenario.laser_power_w, params, consts,
                                    scenario.resolved_line_center(consts));
    total += rates.gamma_g_hz;
  }
  return total;
}

// 50%-overlapped sqrt-Hann chunks, shaped in the frequency domain; the overlapped
// squares sum to one, so a flat shaping gain reproduces white noise exactly
std::vector<double> colored_chunk(const detector_model& d, uint64_t seed, long q) {
  block_rng rng(seed, kStreamLaser, static_cast<uint64_t>(q + 1));
  std::vector<double> buf(kChunk);
  for (size_t n = 0; n < kChunk; ++n) {
    const double w = std::sin(kPi * (static_cast<double>(n) + 0.5) /
                              static_cast<double>(kChunk));
    buf[n] = rng.gaussian() * w;
  }
  auto bins = detail::rfft(buf, kChunk);
  const double df = d.sample_rate_hz / static_cast<double>(kChunk);
  for (size_t j = 0; j < bins.size(); ++j) {
    bins[j] *= std::sqrt(laser_weight(d, df * static_cast<double>(j)) *
                         d.sample_rate_hz / 2.0);
  }
  return detail::irfft(bins, kChunk);
}

}  // namespace

void detector_model::validate() const {
  if (!(volts_per_photon_rate > 0.0) || !std::isfinite(volts_per_photon_rate))
    throw config_error("volts_per_photon_rate must be > 0");
  if (!(electronic_noise_v_rthz >= 0.0) || !std::isfinite(electronic_noise_v_rthz))
    throw config_error("electronic_noise_v_rthz must be >= 0");
  if (!(laser_noise_fraction >= 0.0) || !std::isfinite(laser_noise_fraction))
    throw config_error("laser_noise_fraction must be >= 0");
  if (!(laser_noise_corner_hz > 0.0) || !std::isfinite(laser_noise_corner_hz))
    throw config_error("laser_noise_corner_hz must be > 0");
  if (!(laser_noise_exponent > 0.0) || !(laser_noise_exponent <= 8.0))
    throw config_error("laser_noise_exponent must be in (0, 8]");
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
    throw config_error("sample_rate_hz must be > 0");
}

noise_budget budget_at(const drive_scenario& scenario, const ensemble_params& params,
                       const physical_constants& consts, const detector_model& detector,
                       double at_cycle_hz) {
  scenario.validate(params, consts);
  detector.validate();
  if (!(at_cycle_hz >= 0.0) || !std::isfinite(at_cycle_hz))
    throw config_error("budget frequency must be >= 0");

  const double gamma_p = pump_rate(scenario.laser_power_w, params);
  const double p_bar = equilibrium_population(gamma_p, params.gamma1_hz,
                                              mean_drive_rate(scenario, params, consts));

  noise_budget out;
  out.mean_rate_hz = fluorescence_rate(p_bar, gamma_p, params);
  out.mean_volts = detector.volts_per_photon_rate * out.mean_rate_hz;
  out.shot_psd_v2_hz = 2.0 * detector.volts_per_photon_rate *
                       detector.volts_per_photon_rate * out.mean_rate_hz;
  out.laser_psd_v2_hz = out.mean_volts * detector.laser_noise_fraction * out.mean_volts *
                        detector.laser_noise_fraction *
                        laser_weight(detector, at_cycle_hz);
  out.electronic_psd_v2_hz =
      detector.electronic_noise_v_rthz * detector.electronic_noise_v_rthz;
  out.total_psd_v2_hz =
      out.shot_psd_v2_hz + out.laser_psd_v2_hz + out.electronic_psd_v2_hz;
  return out;
}

time_trace synthesize_trace(const drive_scenario& scenario, const ensemble_params& params,
                            const physical_constants& consts, const detector_model& detector,
                            uint64_t seed, const noise_toggles& toggles) {
  scenario.validate(params, consts);
  detector.validate();

  const double dt = 1.0 / detector.sample_rate_hz;
  const long long n_ll = std::llround(scenario.duration_s * detector.sample_rate_hz);
  if (n_ll < 2) throw config_error("trace needs at least 2 samples");
  const size_t n = static_cast<size_t>(n_ll);
  if (n > kMaxSamples)
    throw config_error("trace longer than " + std::to_string(kMaxSamples) + " samples");

  const double bound = recommended_step(scenario, params, consts);
  size_t stride = static_cast<size_t>(std::ceil(dt / bound - 1e-12));
  if (stride < 1) stride = 1;

  std::vector<double> rates(n);
  {
    const auto traj = integrate_rate_equation(scenario, params, consts, dt / stride, stride);
    if (traj.p0.size() < n) throw numeric_error("integration produced too few samples");
    const double gamma_p = pump_rate(scenario.laser_power_w, params);
    for (size_t k = 0; k < n; ++k)
      rates[k] = fluorescence_rate(traj.p0[k], gamma_p, params);
  }

  const double vppr = detector.volts_per_photon_rate;
  std::vector<double> volts(n);
  for (size_t k = 0; k < n; ++k) volts[k] = vppr * rates[k];

  if (toggles.laser && detector.laser_noise_fraction > 0.0) {
    const size_t hop = kChunk / 2;
    std::vector<double> prev = colored_chunk(detector, seed, -1);
    for (size_t q = 0; q * hop < n; ++q) {
      std::vector<double> cur = colored_chunk(detector, seed, static_cast<long>(q));
      const size_t base = q * hop;
      const size_t len = std::min(hop, n - base);
      for (size_t i = 0; i < len; ++i) {
        const double eta = prev[hop + i] + cur[i];
        volts[base + i] += volts[base + i] * detector.laser_noise_fraction * eta;
      }
      prev = std::move(cur);
    }
  }

  if (toggles.shot) {
    const double mean_rate =
        std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(n);
    const double lambda = mean_rate * dt;
    if (lambda < 100.0)
      throw numeric_error("mean photon count per sample is " + std::to_string(lambda) +
                          "; need >= 100 for the Gaussian shot-noise model");
    block_rng rng(seed, kStreamShot, 0);
    for (size_t k = 0; k < n; ++k) {
      if (k % kRngBlockSamples == 0 && k > 0)
        rng = block_rng(seed, kStreamShot, k / kRngBlockSamples);
      volts[k] += vppr * std::sqrt(rates[k] * detector.sample_rate_hz) * rng.gaussian();
    }
  }

  if (toggles.electronic && detector.electronic_noise_v_rthz > 0.0) {
    const double sigma =
        detector.electronic_noise_v_rthz * std::sqrt(detector.sample_rate_hz / 2.0);
    block_rng rng(seed, kStreamElectronic, 0);
    for (size_t k = 0; k < n; ++k) {
      if (k % kRngBlockSamples == 0 && k > 0)
        rng = block_rng(seed, kStreamElectronic, k / kRngBlockSamples);
      volts[k] += sigma * rng.gaussian();
    }
  }

  time_trace trace;
  trace.sample_rate_hz = detector.sample_rate_hz;
  trace.t0_s = 0.0;
  trace.volts = std::move(volts);
  trace.seed = seed;
  trace.scenario_hash = 0;
  return trace;
}

double calibrate_noise(const detector_model& detector, const drive_scenario& op_scenario,
                       const ensemble_params& params, const physical_constants& consts,
                       double target_t_per_rthz) {
  op_scenario.validate(params, consts);
  detector.validate();
  if (!(target_t_per_rthz > 0.0) || !std::isfinite(target_t_per_rthz))
    throw config_error("target sensitivity must be > 0");
  if (op_scenario.tones.size() != 2)
    throw config_error("calibration needs a two-tone (reference + signal) scenario");
  const auto& ref = op_scenario.tones[0];
  const auto& sig = op_scenario.tones[1];
  if (!(sig.amplitude_tesla < ref.amplitude_tesla))
    throw config_error("calibration scenario must list the reference tone first");
  const double delta = std::abs(sig.frequency_hz - ref.frequency_hz);
  if (!(delta > 0.0)) throw config_error("calibration tones must have a nonzero beat");

  // the beat response owns the delta dependence, so both saturation rates are
  // taken on resonance here
  const double gamma_p = pump_rate(op_scenario.laser_power_w, params);
  const double g_ref = drive_rate(ref.amplitude_tesla, consts);
  const double g_sig = drive_rate(sig.amplitude_tesla, consts);
  const double gamma_ref = g_ref * g_ref / params.gamma2_hz;
  const double gamma_sig = g_sig * g_sig / params.gamma2_hz;
  const auto resp =
      heterodyne_amplitude(gamma_p, params.gamma1_hz, gamma_ref, gamma_sig, delta);

  const double kappa = detector.volts_per_photon_rate * params.n_emitters *
                       params.collection_k * gamma_p * params.contrast * resp.amplitude /
                       sig.amplitude_tesla;

  detector_model quiet = detector;
  quiet.laser_noise_fraction = 0.0;
  const double f_beat = beat_cycle_hz(delta);
  const auto floor_budget = budget_at(op_scenario, params, consts, quiet, f_beat);
  const double s_floor = floor_budget.shot_psd_v2_hz + floor_budget.electronic_psd_v2_hz;

  const double s_req =
      kappa * target_t_per_rthz * kappa * target_t_per_rthz / (8.0 * kSensitivityEnbw);
  if (s_req <= s_floor) {
    const double achievable = std::sqrt(s_floor * 8.0 * kSensitivityEnbw) / kappa;
    throw numeric_error("target sensitivity " + std::to_string(target_t_per_rthz) +
                        " T/sqrt(Hz) is below the shot+electronic floor of " +
                        std::to_string(achievable) + " T/sqrt(Hz)");
  }
  return std::sqrt((s_req - s_floor) /
                   (floor_budget.mean_volts * floor_budget.mean_volts *
                    laser_weight(detector, f_beat)));
}

}  // namespace nvhet
