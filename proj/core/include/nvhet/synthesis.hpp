#pragma once

#include <cstdint>

#include "nvhet/constants.hpp"
#include "nvhet/dynamics.hpp"
#include "nvhet/params.hpp"
#include "nvhet/trace.hpp"

namespace nvhet {

// photodetector chain: volts = volts_per_photon_rate * rate, plus noise.
// detector frequencies (corner, sample rate) are cycle frequencies of the
// sampled voltage, not drive rates; beat_cycle_hz converts between the two.
struct detector_model {
  double volts_per_photon_rate = 1e-15;   // V per (photon/s)
  double electronic_noise_v_rthz = 1e-8;  // white input noise, V/sqrt(Hz) one-sided
  double laser_noise_fraction = 0.0;      // fractional intensity noise at low frequency
  double laser_noise_corner_hz = 100.0;
  double laser_noise_exponent = 1.0;      // 1/(1 + (f/corner)^exponent) shaping
  double sample_rate_hz = 2000.0;
  void validate() const;
};

struct noise_toggles {
  bool shot = true;
  bool laser = true;
  bool electronic = true;
};

// equivalent noise bandwidth of the Hann window, in bins; fixed by the window choice
inline constexpr double kSensitivityEnbw = 1.5;

// one-sided voltage noise densities at a given cycle frequency, for the
// time-averaged drive (gates ignored, cross-tone beats average out)
struct noise_budget {
  double mean_rate_hz = 0.0;  // mean photon rate at the detector
  double mean_volts = 0.0;
  double shot_psd_v2_hz = 0.0;
  double laser_psd_v2_hz = 0.0;
  double electronic_psd_v2_hz = 0.0;
  double total_psd_v2_hz = 0.0;
};
noise_budget budget_at(const drive_scenario& scenario, const ensemble_params& params,
                       const physical_constants& consts, const detector_model& detector,
                       double at_cycle_hz);

// integrates the population, converts to photon rate, and adds shot, laser
// intensity, and electronic noise sample by sample. deterministic in
// (scenario, params, detector, seed, toggles); samples start at t = 0
time_trace synthesize_trace(const drive_scenario& scenario, const ensemble_params& params,
                            const physical_constants& consts, const detector_model& detector,
                            uint64_t seed, const noise_toggles& toggles = {});

// smallest laser_noise_fraction that degrades the beat-peak field sensitivity of the
// two-tone operating scenario to target_t_per_rthz. throws numeric_error when the
// shot plus electronic floor already exceeds the target
double calibrate_noise(const detector_model& detector, const drive_scenario& op_scenario,
                       const ensemble_params& params, const physical_constants& consts,
                       double target_t_per_rthz);

}  // namespace nvhet
