#pragma once

#include <vector>

#include "nvhet/constants.hpp"
#include "nvhet/params.hpp"
#include "nvhet/spectrum.hpp"

namespace nvhet {

// Unit convention used throughout: every rate (relaxation, pump, drive-induced) and
// the beat detuning delta share plain s^-1 units, written Hz. The beat enters the
// rate equation literally as cos(delta*t + phi), so on a sampled-time spectrum the
// beat line appears at delta/(2*pi) cycles per second; beat_cycle_hz() converts.
inline constexpr double beat_cycle_hz(double delta_hz) { return delta_hz / (2.0 * kPi); }

// drive coupling rate g for a linearly polarized field of amplitude b (tesla);
// the 1/sqrt(2) keeps only the co-rotating half of the field
double drive_rate(double amplitude_tesla, const physical_constants& consts);

// relaxation induced by one weakly driving tone: g^2/gamma2 on resonance,
// scaled by the absorption lineshape gamma2^2/(gamma2^2 + detuning^2) off resonance.
// requires g << gamma2 (weak drive); throws numeric_error beyond g > gamma2/3.
double induced_relaxation(double drive_rate_hz, double gamma2_hz, double detuning_hz = 0.0);

// optical repolarization rate, linear in pump power
double pump_rate(double laser_power_w, const ensemble_params& params);

// coupling + relaxation rates derived from one tone and a pump power level
struct derived_rates {
  double g_hz = 0.0;        // drive coupling rate
  double gamma_g_hz = 0.0;  // drive-induced relaxation
  double gamma_p_hz = 0.0;  // optical repolarization rate
};
derived_rates derive_rates(const microwave_tone& tone, double laser_power_w,
                           const ensemble_params& params, const physical_constants& consts,
                           double line_center_hz = 0.0);  // 0 = use zero_field_splitting

// steady-state bright-state population under pumping, spin relaxation and drive-induced
// relaxation; 1/2 + gamma_p / (2*(gamma_p + gamma1 + gamma_g)), always in (1/2, 1]
double equilibrium_population(double gamma_p_hz, double gamma1_hz, double gamma_g_hz);

// population relaxing from p_initial toward the equilibrium at rate gamma1+gamma_g+gamma_p
double transient_population(double t_s, double p_initial, double gamma_p_hz,
                            double gamma1_hz, double gamma_g_hz);

// small-signal population oscillation under a reference tone (relaxation gamma_ref)
// beating against a weak signal tone (relaxation gamma_sig) at beat rate delta:
//   p0(t) ~ p_eq + amplitude * cos(delta*t + phase)
struct heterodyne_response {
  double amplitude = 0.0;   // population-fraction oscillation amplitude
  double phase_rad = 0.0;   // includes the low-pass lag atan(delta/sum) plus sign flip
  double delta_hz = 0.0;
  bool weak_signal = true;  // false when gamma_sig is too large for the linearization
};
heterodyne_response heterodyne_amplitude(double gamma_p_hz, double gamma1_hz,
                                         double gamma_ref_hz, double gamma_sig_hz,
                                         double delta_hz, double drive_phase_rad = 0.0);

// beat rate at which the heterodyne amplitude falls to half its delta=0 value:
// sqrt(3) * (gamma_p + gamma1 + gamma_ref)
double bandwidth_3db(double gamma_p_hz, double gamma1_hz, double gamma_ref_hz);

// detected photon rate for a given bright-state population
double fluorescence_rate(double p0, double gamma_p_hz, const ensemble_params& params);

// steady-state fluorescence vs drive frequency: hyperfine triplet of equal-weight
// Lorentzian dips. strong_probe flags saturation broadening above ~1% linewidth growth.
struct odmr_scan {
  spectrum scan;        // frequency axis = drive frequency, amplitude = photon rate
  bool strong_probe = false;
  double expected_fwhm_hz = 0.0;  // per-line width including saturation broadening
};
odmr_scan odmr_spectrum(const ensemble_params& params, const physical_constants& consts,
                        double probe_amplitude_tesla, double laser_power_w,
                        const std::vector<double>& drive_frequency_hz,
                        double line_center_hz = 0.0);

}  // namespace nvhet
