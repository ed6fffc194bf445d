#include "nvhet/physics.hpp"

#include <cmath>

#include "nvhet/errors.hpp"

namespace nvhet {

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw config_error(std::string(name) + " must be finite");
}

void require_positive(double v, const char* name) {
  require_finite(v, name);
  if (v <= 0.0) throw config_error(std::string(name) + " must be > 0");
}

void require_nonnegative(double v, const char* name) {
  require_finite(v, name);
  if (v < 0.0) throw config_error(std::string(name) + " must be >= 0");
}

}  // namespace

void physical_constants::validate() const {
  require_positive(gamma_hz_per_t, "gamma_hz_per_t");
  require_positive(zero_field_splitting_hz, "zero_field_splitting_hz");
  require_positive(hyperfine_splitting_hz, "hyperfine_splitting_hz");
}

void ensemble_params::validate() const {
  require_positive(gamma1_hz, "gamma1_hz");
  require_positive(gamma2_hz, "gamma2_hz");
  require_positive(contrast, "contrast");
  if (contrast > 1.0) throw config_error("contrast must be <= 1");
  require_positive(n_emitters, "n_emitters");
  if (n_emitters < 1.0) throw config_error("n_emitters must be >= 1");
  require_positive(collection_k, "collection_k");
  if (collection_k > 1.0) throw config_error("collection_k must be <= 1");
  require_positive(pump_coeff_hz_per_w, "pump_coeff_hz_per_w");
}

void microwave_tone::validate() const {
  require_nonnegative(amplitude_tesla, "tone amplitude_tesla");
  require_nonnegative(frequency_hz, "tone frequency_hz");
  require_finite(phase_rad, "tone phase_rad");
}

double drive_rate(double amplitude_tesla, const physical_constants& consts) {
  require_nonnegative(amplitude_tesla, "amplitude_tesla");
  return consts.gamma_hz_per_t * amplitude_tesla / std::sqrt(2.0);
}

double induced_relaxation(double drive_rate_hz, double gamma2_hz, double detuning_hz) {
  require_nonnegative(drive_rate_hz, "drive_rate_hz");
  require_positive(gamma2_hz, "gamma2_hz");
  require_finite(detuning_hz, "detuning_hz");
  // the rate picture only holds for drives well inside the dephasing-broadened line
  if (drive_rate_hz > gamma2_hz / 3.0)
    throw numeric_error("drive rate " + std::to_string(drive_rate_hz) +
                        " Hz exceeds weak-drive bound gamma2/3 = " +
                        std::to_string(gamma2_hz / 3.0) + " Hz");
  const double on_resonance = drive_rate_hz * drive_rate_hz / gamma2_hz;
  const double lorentz = gamma2_hz * gamma2_hz /
                         (gamma2_hz * gamma2_hz + detuning_hz * detuning_hz);
  return on_resonance * lorentz;
}

double pump_rate(double laser_power_w, const ensemble_params& params) {
  require_nonnegative(laser_power_w, "laser_power_w");
  return params.pump_coeff_hz_per_w * laser_power_w;
}

derived_rates derive_rates(const microwave_tone& tone, double laser_power_w,
                           const ensemble_params& params, const physical_constants& consts,
                           double line_center_hz) {
  tone.validate();
  const double center = line_center_hz > 0.0 ? line_center_hz : consts.zero_field_splitting_hz;
  derived_rates r;
  r.g_hz = drive_rate(tone.amplitude_tesla, consts);
  r.gamma_g_hz = induced_relaxation(r.g_hz, params.gamma2_hz, tone.frequency_hz - center);
  r.gamma_p_hz = pump_rate(laser_power_w, params);
  return r;
}

double equilibrium_population(double gamma_p_hz, double gamma1_hz, double gamma_g_hz) {
  require_nonnegative(gamma_p_hz, "gamma_p_hz");
  require_positive(gamma1_hz, "gamma1_hz");
  require_nonnegative(gamma_g_hz, "gamma_g_hz");
  return 0.5 + gamma_p_hz / (2.0 * (gamma_p_hz + gamma1_hz + gamma_g_hz));
}

double transient_population(double t_s, double p_initial, double gamma_p_hz,
                            double gamma1_hz, double gamma_g_hz) {
  require_finite(t_s, "t_s");
  require_finite(p_initial, "p_initial");
  if (p_initial < 0.0 || p_initial > 1.0) throw config_error("p_initial must be in [0, 1]");
  const double p_eq = equilibrium_population(gamma_p_hz, gamma1_hz, gamma_g_hz);
  const double rate = gamma1_hz + gamma_g_hz + gamma_p_hz;
  return p_eq + (p_initial - p_eq) * std::exp(-rate * t_s);
}

heterodyne_response heterodyne_amplitude(double gamma_p_hz, double gamma1_hz,
                                         double gamma_ref_hz, double gamma_sig_hz,
                                         double delta_hz, double drive_phase_rad) {
  require_positive(gamma_p_hz, "gamma_p_hz");
  require_positive(gamma1_hz, "gamma1_hz");
  require_nonnegative(gamma_ref_hz, "gamma_ref_hz");
  require_nonnegative(gamma_sig_hz, "gamma_sig_hz");
  require_finite(delta_hz, "delta_hz");
  require_finite(drive_phase_rad, "drive_phase_rad");

  const double sum = gamma_p_hz + gamma1_hz + gamma_ref_hz;
  heterodyne_response out;
  out.delta_hz = delta_hz;
  out.amplitude = gamma_p_hz * std::sqrt(gamma_ref_hz * gamma_sig_hz) /
                  (sum * std::sqrt(sum * sum + delta_hz * delta_hz));
  // phase convention: p0(t) = p_eq + amplitude * cos(delta*t + phase_rad).
  // population dips when the envelope peaks, hence the pi; the low-pass response
  // lags the envelope by atan(delta/sum), which subtracts under this convention
  double phase = drive_phase_rad - std::atan2(delta_hz, sum) + kPi;
  phase = std::fmod(phase, 2.0 * kPi);
  if (phase < 0.0) phase += 2.0 * kPi;
  out.phase_rad = phase;
  out.weak_signal = gamma_sig_hz <= 0.25 * gamma_ref_hz || gamma_ref_hz == 0.0;
  return out;
}

double bandwidth_3db(double gamma_p_hz, double gamma1_hz, double gamma_ref_hz) {
  require_positive(gamma_p_hz, "gamma_p_hz");
  require_positive(gamma1_hz, "gamma1_hz");
  require_nonnegative(gamma_ref_hz, "gamma_ref_hz");
  return std::sqrt(3.0) * (gamma_p_hz + gamma1_hz + gamma_ref_hz);
}

double fluorescence_rate(double p0, double gamma_p_hz, const ensemble_params& params) {
  require_finite(p0, "p0");
  if (p0 < 0.0 || p0 > 1.0) throw numeric_error("p0 outside [0, 1]");
  require_nonnegative(gamma_p_hz, "gamma_p_hz");
  return params.n_emitters * params.collection_k * gamma_p_hz *
         (1.0 - params.contrast * (1.0 - p0));
}

odmr_scan odmr_spectrum(const ensemble_params& params, const physical_constants& consts,
                        double probe_amplitude_tesla, double laser_power_w,
                        const std::vector<double>& drive_frequency_hz,
                        double line_center_hz) {
  params.validate();
  consts.validate();
  if (drive_frequency_hz.empty()) throw config_error("odmr_spectrum: empty frequency grid");
  const double center = line_center_hz > 0.0 ? line_center_hz : consts.zero_field_splitting_hz;
  const double g = drive_rate(probe_amplitude_tesla, consts);
  const double gamma_p = pump_rate(laser_power_w, params);
  const double gamma_g0 = induced_relaxation(g, params.gamma2_hz, 0.0);
  const double sum0 = gamma_p + params.gamma1_hz;

  odmr_scan out;
  // each hyperfine projection hosts a third of the emitters and shifts the line
  const double offsets[3] = {-consts.hyperfine_splitting_hz, 0.0,
                             consts.hyperfine_splitting_hz};
  out.scan.frequency_hz = drive_frequency_hz;
  out.scan.amplitude.resize(drive_frequency_hz.size());
  out.scan.window = "model";
  for (size_t i = 0; i < drive_frequency_hz.size(); ++i) {
    const double f = drive_frequency_hz[i];
    double rate = 0.0;
    for (double off : offsets) {
      const double gamma_g = induced_relaxation(g, params.gamma2_hz, f - (center + off));
      const double p0 = equilibrium_population(gamma_p, params.gamma1_hz, gamma_g);
      rate += (params.n_emitters / 3.0) * params.collection_k * gamma_p *
              (1.0 - params.contrast * (1.0 - p0));
    }
    out.scan.amplitude[i] = rate;
  }
  // pump+relaxation compete with the drive, widening each dip
  const double broadening = std::sqrt(1.0 + gamma_g0 / sum0);
  out.expected_fwhm_hz = 2.0 * params.gamma2_hz * broadening;
  out.strong_probe = broadening > 1.01;
  return out;
}

}  // namespace nvhet
