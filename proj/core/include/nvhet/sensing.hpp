#pragma once

#include <vector>

#include "nvhet/constants.hpp"
#include "nvhet/params.hpp"

namespace nvhet {

// continuous-beat operating point: pump power, reference drive field, and the
// beat rate between the signal and its nearest reference channel
struct operating_point {
  double laser_power_w = kBenchLaserPowerW;
  double reference_b_tesla = 2.2e-7;
  double delta_hz = 480.0;  // beat rate; the voltage beat sits at delta/(2*pi) cycles
  int channels = 1;
  void validate(const ensemble_params& params, const physical_constants& consts) const;
};

// population beat amplitude with `channels` equal reference tones sharing the
// total relaxation load; channels = 1 reproduces the single-tone response
double multichannel_beat_amplitude(double gamma_p_hz, double gamma1_hz,
                                   double gamma_ref_per_channel_hz, int channels,
                                   double gamma_sig_hz, double delta_hz);

// shot-limited amplitude signal-to-noise of the beat after integrating for t_s.
// channels enter only through the summed reference saturation
double multichannel_snr(const ensemble_params& params, const physical_constants& consts,
                        const operating_point& op, int channels, double signal_b_tesla,
                        double t_s);
double analytic_snr(const ensemble_params& params, const physical_constants& consts,
                    const operating_point& op, double signal_b_tesla, double t_s);

// upper bound of the shot-limited snr over pump and reference drive
double snr_saturation_limit(const ensemble_params& params, const physical_constants& consts,
                            double signal_b_tesla, double t_s, int channels = 1);

// smallest resolvable field at the saturated operating point, T/sqrt(Hz) for t_s = 1
double shot_noise_sensitivity(const ensemble_params& params,
                              const physical_constants& consts, double t_s = 1.0);

struct search_box {
  double lo = 0.0;
  double hi = 0.0;
};
struct optimize_result {
  operating_point point;
  double snr = 0.0;
  int iterations = 0;
  bool converged = false;
  bool clamped = false;  // reference box was cut down to the weak-drive bound
};
// coordinate golden-section ascent of multichannel_snr over (laser power, reference
// field) inside the given boxes; delta and channel count stay fixed
optimize_result optimize_operating_point(const ensemble_params& params,
                                         const physical_constants& consts,
                                         const operating_point& start,
                                         double signal_b_tesla, double t_s,
                                         search_box power_box, search_box reference_box);

struct grid_plan {
  double spacing_hz = 0.0;
  int channels = 0;
  std::vector<double> frequencies_hz;  // offsets from the low band edge
  double snr_penalty = 1.0;            // sqrt(channels), divides the single-channel snr
  bool coverage_warning = false;       // band is wide compared with the sensor line
  bool weak_drive_ok = true;           // summed reference drive stays within bounds
};
// covers [band_lo, band_hi] with equally spaced reference channels; default spacing
// is three 3 dB bandwidths so every in-band beat stays well inside the response
grid_plan plan_reference_grid(double band_lo_hz, double band_hi_hz,
                              const ensemble_params& params,
                              const physical_constants& consts, const operating_point& op,
                              int max_channels, double spacing_hint_hz = 0.0);

}  // namespace nvhet
