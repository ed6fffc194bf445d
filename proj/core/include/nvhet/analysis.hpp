#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nvhet/constants.hpp"
#include "nvhet/spectrum.hpp"
#include "nvhet/trace.hpp"

namespace nvhet {

enum class window_kind { rect, hann };

// mean-removed one-sided amplitude spectrum. zero_pad_factor >= 1 zero-pads to (at
// least) that multiple of the record, rounded up to an FFT-friendly length; the
// normalization is pad-independent and keeps a full-scale sinusoid at amplitude 1.
// Hann is compensated by its coherent gain; bin 0 reports the removed mean.
spectrum amplitude_spectrum(const time_trace& trace, window_kind window = window_kind::rect,
                            int zero_pad_factor = 1);

// scalloping-free amplitude spectrum on `bins` points spanning
// [f_center - f_span/2, f_center + f_span/2] (heterodyne + block decimation +
// exact DFT); same normalization as amplitude_spectrum, rectangular window
spectrum zoom_amplitude_spectrum(const time_trace& trace, double f_center_hz,
                                 double f_span_hz, size_t bins);

struct peak_estimate {
  double frequency_hz = 0.0;
  double amplitude = 0.0;
  double snr = 0.0;        // amplitude / (2 * noise rms), the convention used throughout
  double noise_rms = 0.0;
  size_t bin = 0;
};
// peak = max amplitude within signal_span of f_signal; noise = rms amplitude over
// noise_span excluding the signal span (mean bin excluded from both)
peak_estimate peak_snr(const spectrum& spec, double f_signal_hz, double signal_span_hz,
                       double noise_span_hz);

struct lorentzian_line {
  double center_hz = 0.0;
  double fwhm_hz = 0.0;
  double height = 0.0;  // negative for dips
};
struct multi_lorentz_fit {
  std::vector<lorentzian_line> lines;  // sorted by center
  double offset = 0.0;
  double rms_residual = 0.0;
  bool converged = false;
  int iterations = 0;
};
// offset + sum of n_lines Lorentzians; empty init seeds from the strongest extrema
multi_lorentz_fit lorentzian_multifit(std::span<const double> x, std::span<const double> y,
                                      int n_lines, std::vector<lorentzian_line> init = {});

struct exponential_fit_result {
  double rate_hz = 0.0;
  double amplitude = 0.0;  // value at t = t[0] minus the asymptote
  double asymptote = 0.0;
  double rms_residual = 0.0;
  bool converged = false;
};
// a * exp(-rate * (t - t[0])) + c on an ascending time grid
exponential_fit_result exponential_rate_fit(std::span<const double> t_s,
                                            std::span<const double> y);

struct power_law_fit_result {
  double exponent = 0.0;
  double prefactor = 0.0;
  double rms_log_residual = 0.0;
};
// log-log linear regression; requires strictly positive x and y
power_law_fit_result power_law_fit(std::span<const double> x, std::span<const double> y);

struct responsivity_fit_result {
  double gamma2_hz = 0.0;
  double scale = 0.0;
  double gamma2_sigma_hz = 0.0;
  bool spans_turnover = false;  // the amplitude maximum lies strictly inside the sweep
  bool converged = false;
};
// fits beat amplitude vs reference field to
//   scale * sqrt(Gg(B)) / (Sigma * sqrt(Sigma^2 + delta^2)),
// Gg(B) = (gamma*B)^2/(2*gamma2), Sigma = gamma_p + gamma1 + Gg(B), with gamma2 free
responsivity_fit_result responsivity_fit(std::span<const double> b_ref_tesla,
                                         std::span<const double> amplitude,
                                         double gamma_p_hz, double gamma1_hz, double delta_hz,
                                         const physical_constants& consts);

// distance from f to the nearest line of the comb {offset + k*spacing}; in [0, spacing/2]
double fold_frequency(double f_hz, double spacing_hz, double offset_hz = 0.0);

struct grid_measurement {
  double spacing_hz = 0.0;
  double offset_hz = 0.0;
  double beat_hz = 0.0;  // measured fold, in [0, spacing/2]
};
// every frequency in [band_lo, band_hi] whose folds match all measured beats within
/// tolerance: coarse scan, then per-basin refinement of the worst-grid error, merged
// within the tolerance scale. deterministic; exact matches always survive refinement
std::vector<double> disambiguate_frequency(std::span<const grid_measurement> measurements,
                                           double band_lo_hz, double band_hi_hz,
                                           double tolerance_hz);

struct linewidth_estimate {
  double fwhm_hz = 0.0;
  double center_hz = 0.0;
  double peak_amplitude = 0.0;
  bool converged = false;
};
// Lorentzian fit to the squared zoom spectrum around the strongest line near
// f_center; for a coherent beat the fitted width is resolution-limited (~0.87/T)
linewidth_estimate beat_linewidth(const time_trace& trace, double f_center_hz);

}  // namespace nvhet
