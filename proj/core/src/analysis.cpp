#include "nvhet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>

#include "fft.hpp"
#include "nvhet/errors.hpp"
#include "nvhet/fit.hpp"

namespace nvhet {

namespace {

void check_trace(const time_trace& trace, size_t min_samples) {
  if (trace.sample_rate_hz <= 0.0 || !std::isfinite(trace.sample_rate_hz))
    throw config_error("trace sample_rate_hz must be > 0");
  if (trace.volts.size() < min_samples)
    throw config_error("trace too short: need at least " + std::to_string(min_samples) +
                       " samples");
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

double lorentz(double x, double center, double fwhm, double height) {
  const double u = 2.0 * (x - center) / fwhm;
  return height / (1.0 + u * u);
}

}  // namespace

spectrum amplitude_spectrum(const time_trace& trace, window_kind window,
                            int zero_pad_factor) {
  check_trace(trace, 8);
  if (zero_pad_factor < 1 || zero_pad_factor > 64)
    throw config_error("zero_pad_factor must be in [1, 64]");

  const size_t n = trace.volts.size();
  const double mean = mean_of(trace.volts);
  std::vector<double> buf(n);
  double wsum = 0.0;
  if (window == window_kind::hann) {
    for (size_t i = 0; i < n; ++i) {
      // periodic Hann: exact 1.5-bin equivalent noise bandwidth at any length
      const double w = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                            static_cast<double>(n));
      buf[i] = (trace.volts[i] - mean) * w;
      wsum += w;
    }
  } else {
    for (size_t i = 0; i < n; ++i) buf[i] = trace.volts[i] - mean;
    wsum = static_cast<double>(n);
  }

  const size_t nfft = detail::next_fast_size(n * static_cast<size_t>(zero_pad_factor));
  auto bins = detail::rfft(buf, nfft);

  spectrum spec;
  spec.duration_s = static_cast<double>(n) / trace.sample_rate_hz;
  spec.window = window == window_kind::hann ? "hann" : "rect";
  spec.frequency_hz.resize(bins.size());
  spec.amplitude.resize(bins.size());
  const double scale = 2.0 / wsum;
  for (size_t k = 0; k < bins.size(); ++k) {
    spec.frequency_hz[k] = static_cast<double>(k) * trace.sample_rate_hz /
                           static_cast<double>(nfft);
    spec.amplitude[k] = scale * std::abs(bins[k]);
  }
  if (nfft % 2 == 0) spec.amplitude.back() *= 0.5;  // Nyquist bin is not doubled
  spec.amplitude[0] = std::abs(mean);               // report the removed mean
  return spec;
}

spectrum zoom_amplitude_spectrum(const time_trace& trace, double f_center_hz,
                                 double f_span_hz, size_t bins) {
  check_trace(trace, 16);
  if (bins < 2 || bins > 1000000) throw config_error("zoom bins must be in [2, 1e6]");
  if (!(f_span_hz > 0.0)) throw config_error("zoom span must be > 0");
  const double nyquist = trace.sample_rate_hz / 2.0;
  if (!(f_center_hz - f_span_hz / 2.0 > 0.0) || !(f_center_hz + f_span_hz / 2.0 < nyquist))
    throw config_error("zoom window must lie inside (0, sample_rate/2)");

  const size_t n = trace.volts.size();
  const double dt = 1.0 / trace.sample_rate_hz;
  const double mean = mean_of(trace.volts);

  // down-convert at f_center and sum blocks; block phase error stays second order
  // because each block is referenced to its own center time
  const size_t block = std::max<size_t>(1, n / 4096);
  const size_t n_blocks = (n + block - 1) / block;
  std::vector<std::complex<double>> zsum(n_blocks);
  std::vector<double> zt(n_blocks);
  const std::complex<double> rot = std::polar(1.0, -2.0 * kPi * f_center_hz * dt);
  std::complex<double> cur{1.0, 0.0};
  for (size_t b = 0; b < n_blocks; ++b) {
    const size_t lo = b * block;
    const size_t hi = std::min(n, lo + block);
    if ((lo & 0xffff) == 0)  // reseed against rotation drift
      cur = std::polar(1.0, std::remainder(-2.0 * kPi * f_center_hz * dt *
                                               static_cast<double>(lo), 2.0 * kPi));
    std::complex<double> acc{0.0, 0.0};
    for (size_t k = lo; k < hi; ++k) {
      acc += (trace.volts[k] - mean) * cur;
      cur *= rot;
    }
    zsum[b] = acc;
    zt[b] = dt * (static_cast<double>(lo) + static_cast<double>(hi - lo - 1) / 2.0);
  }

  spectrum spec;
  spec.duration_s = static_cast<double>(n) / trace.sample_rate_hz;
  spec.window = "zoom";
  spec.frequency_hz.resize(bins);
  spec.amplitude.resize(bins);
  const double f_lo = f_center_hz - f_span_hz / 2.0;
  const double df = f_span_hz / static_cast<double>(bins - 1);
  const double scale = 2.0 / static_cast<double>(n);
  for (size_t j = 0; j < bins; ++j) {
    const double f = f_lo + df * static_cast<double>(j);
    const double nu = f - f_center_hz;
    std::complex<double> s{0.0, 0.0};
    for (size_t b = 0; b < n_blocks; ++b)
      s += zsum[b] * std::polar(1.0, -2.0 * kPi * nu * zt[b]);
    spec.frequency_hz[j] = f;
    spec.amplitude[j] = scale * std::abs(s);
  }
  return spec;
}

peak_estimate peak_snr(const spectrum& spec, double f_signal_hz, double signal_span_hz,
                       double noise_span_hz) {
  if (spec.amplitude.size() < 16) throw config_error("spectrum too short for peak_snr");
  if (!(signal_span_hz > 0.0) || !(noise_span_hz > signal_span_hz))
    throw config_error("need 0 < signal_span < noise_span");

  peak_estimate out;
  double noise_sq = 0.0;
  size_t n_sig = 0, n_noise = 0;
  for (size_t k = 1; k < spec.amplitude.size(); ++k) {
    const double d = std::abs(spec.frequency_hz[k] - f_signal_hz);
    if (d <= signal_span_hz / 2.0) {
      ++n_sig;
      if (spec.amplitude[k] > out.amplitude) {
        out.amplitude = spec.amplitude[k];
        out.frequency_hz = spec.frequency_hz[k];
        out.bin = k;
      }
    } else if (d <= noise_span_hz / 2.0) {
      ++n_noise;
      noise_sq += spec.amplitude[k] * spec.amplitude[k];
    }
  }
  if (n_sig == 0) throw config_error("no spectrum bins inside the signal span");
  if (n_noise < 8) throw config_error("fewer than 8 noise bins; widen noise_span_hz");
  out.noise_rms = std::sqrt(noise_sq / static_cast<double>(n_noise));
  out.snr = out.noise_rms > 0.0 ? out.amplitude / (2.0 * out.noise_rms)
                                : std::numeric_limits<double>::infinity();
  return out;
}

multi_lorentz_fit lorentzian_multifit(std::span<const double> x, std::span<const double> y,
                                      int n_lines, std::vector<lorentzian_line> init) {
  if (x.size() != y.size()) throw config_error("lorentzian_multifit: size mismatch");
  if (n_lines < 1 || n_lines > 8) throw config_error("n_lines must be in [1, 8]");
  if (x.size() < static_cast<size_t>(3 * n_lines + 1))
    throw config_error("lorentzian_multifit: too few samples");
  if (!init.empty() && init.size() != static_cast<size_t>(n_lines))
    throw config_error("init must be empty or have n_lines entries");

  const auto [x_min_it, x_max_it] = std::minmax_element(x.begin(), x.end());
  const double x_range = *x_max_it - *x_min_it;
  if (!(x_range > 0.0)) throw config_error("degenerate x axis");

  if (init.empty()) {
    const double offset0 = median_of(std::vector<double>(y.begin(), y.end()));
    std::vector<char> masked(x.size(), 0);
    const double mask_radius = x_range / (4.0 * n_lines);
    for (int l = 0; l < n_lines; ++l) {
      double best = -1.0;
      size_t bi = 0;
      for (size_t i = 0; i < x.size(); ++i) {
        if (masked[i]) continue;
        const double d = std::abs(y[i] - offset0);
        if (d > best) {
          best = d;
          bi = i;
        }
      }
      lorentzian_line ln;
      ln.center_hz = x[bi];
      ln.height = y[bi] - offset0;
      ln.fwhm_hz = x_range / (6.0 * n_lines);
      init.push_back(ln);
      for (size_t i = 0; i < x.size(); ++i)
        if (std::abs(x[i] - x[bi]) < mask_radius) masked[i] = 1;
    }
  }

  std::vector<double> p;
  p.push_back(median_of(std::vector<double>(y.begin(), y.end())));
  for (const auto& ln : init) {
    p.push_back(ln.center_hz);
    p.push_back(ln.fwhm_hz);
    p.push_back(ln.height);
  }

  auto residuals = [&](const std::vector<double>& q, std::vector<double>& r) {
    for (size_t i = 0; i < x.size(); ++i) {
      double m = q[0];
      for (int l = 0; l < n_lines; ++l)
        m += lorentz(x[i], q[1 + 3 * l], std::abs(q[2 + 3 * l]) + 1e-300, q[3 + 3 * l]);
      r[i] = m - y[i];
    }
  };
  auto res = fit_least_squares(residuals, x.size(), std::move(p));

  multi_lorentz_fit out;
  out.offset = res.params[0];
  for (int l = 0; l < n_lines; ++l) {
    lorentzian_line ln;
    ln.center_hz = res.params[1 + 3 * l];
    ln.fwhm_hz = std::abs(res.params[2 + 3 * l]);
    ln.height = res.params[3 + 3 * l];
    out.lines.push_back(ln);
  }
  std::sort(out.lines.begin(), out.lines.end(),
            [](const auto& a, const auto& b) { return a.center_hz < b.center_hz; });
  out.rms_residual = res.rms_residual;
  out.converged = res.converged;
  out.iterations = res.iterations;
  return out;
}

exponential_fit_result exponential_rate_fit(std::span<const double> t_s,
                                            std::span<const double> y) {
  if (t_s.size() != y.size()) throw config_error("exponential_rate_fit: size mismatch");
  const size_t n = t_s.size();
  if (n < 5) throw config_error("exponential_rate_fit: need at least 5 samples");
  for (size_t i = 1; i < n; ++i)
    if (!(t_s[i] > t_s[i - 1])) throw config_error("time axis must be strictly increasing");

  const size_t n_tail = std::max<size_t>(3, n / 10);
  double c0 = 0.0;
  for (size_t i = n - n_tail; i < n; ++i) c0 += y[i];
  c0 /= static_cast<double>(n_tail);
  const double a0 = y[0] - c0;

  double rate0 = 2.0 / (t_s[n - 1] - t_s[0]);
  const double fold = std::abs(a0) / std::numbers::e;
  for (size_t i = 0; i < n; ++i) {
    if (std::abs(y[i] - c0) <= fold) {
      if (t_s[i] > t_s[0]) rate0 = 1.0 / (t_s[i] - t_s[0]);
      break;
    }
  }

  const double t0 = t_s[0];
  auto residuals = [&](const std::vector<double>& q, std::vector<double>& r) {
    for (size_t i = 0; i < n; ++i)
      r[i] = q[0] * std::exp(-q[1] * (t_s[i] - t0)) + q[2] - y[i];
  };
  auto res = fit_least_squares(residuals, n, {a0, rate0, c0});

  exponential_fit_result out;
  out.amplitude = res.params[0];
  out.rate_hz = res.params[1];
  out.asymptote = res.params[2];
  out.rms_residual = res.rms_residual;
  out.converged = res.converged;
  return out;
}

power_law_fit_result power_law_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw config_error("power_law_fit: need matching spans with >= 3 points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw config_error("power_law_fit: inputs must be strictly positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw config_error("power_law_fit: degenerate x values");

  power_law_fit_result out;
  out.exponent = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - out.exponent * sx) / n;
  out.prefactor = std::exp(intercept);
  double ss = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double r = std::log(y[i]) - (intercept + out.exponent * std::log(x[i]));
    ss += r * r;
  }
  out.rms_log_residual = std::sqrt(ss / n);
  return out;
}

responsivity_fit_result responsivity_fit(std::span<const double> b_ref_tesla,
                                         std::span<const double> amplitude,
                                         double gamma_p_hz, double gamma1_hz, double delta_hz,
                                         const physical_constants& consts) {
  if (b_ref_tesla.size() != amplitude.size() || b_ref_tesla.size() < 4)
    throw config_error("responsivity_fit: need matching spans with >= 4 points");
  if (!(gamma_p_hz > 0.0) || !(gamma1_hz > 0.0))
    throw config_error("responsivity_fit: gamma_p and gamma1 must be > 0");
  for (size_t i = 0; i < b_ref_tesla.size(); ++i)
    if (!(b_ref_tesla[i] > 0.0) || !(amplitude[i] > 0.0))
      throw config_error("responsivity_fit: inputs must be strictly positive");

  const double gam = consts.gamma_hz_per_t;
  auto shape = [&](double b, double gamma2) {
    const double gg = gam * b * gam * b / (2.0 * gamma2);
    const double sum = gamma_p_hz + gamma1_hz + gg;
    return std::sqrt(gg) / (sum * std::sqrt(sum * sum + delta_hz * delta_hz));
  };

  size_t i_pk = 0;
  for (size_t i = 1; i < amplitude.size(); ++i)
    if (amplitude[i] > amplitude[i_pk]) i_pk = i;

  // turnover sits near Gg = (gamma_p+gamma1)/3 when delta is small; good enough to seed
  const double b_pk = b_ref_tesla[i_pk];
  const double gamma2_0 = 3.0 * gam * b_pk * gam * b_pk / (2.0 * (gamma_p_hz + gamma1_hz));
  const double scale_0 = amplitude[i_pk] / shape(b_pk, gamma2_0);

  auto residuals = [&](const std::vector<double>& q, std::vector<double>& r) {
    const double g2 = std::abs(q[0]) + 1e-300;
    for (size_t i = 0; i < b_ref_tesla.size(); ++i) {
      // relative residuals: the sweep spans decades of amplitude
      r[i] = q[1] * shape(b_ref_tesla[i], g2) / amplitude[i] - 1.0;
    }
  };
  auto res = fit_least_squares(residuals, b_ref_tesla.size(), {gamma2_0, scale_0});

  responsivity_fit_result out;
  out.gamma2_hz = std::abs(res.params[0]);
  out.scale = res.params[1];
  out.gamma2_sigma_hz = std::sqrt(std::max(0.0, res.covariance[0]));
  out.spans_turnover = i_pk > 0 && i_pk + 1 < amplitude.size();
  out.converged = res.converged;
  return out;
}

double fold_frequency(double f_hz, double spacing_hz, double offset_hz) {
  if (!(spacing_hz > 0.0)) throw config_error("fold spacing must be > 0");
  if (!std::isfinite(f_hz) || !std::isfinite(offset_hz))
    throw config_error("fold arguments must be finite");
  double r = std::fmod(f_hz - offset_hz, spacing_hz);
  if (r < 0.0) r += spacing_hz;
  return std::min(r, spacing_hz - r);
}

std::vector<double> disambiguate_frequency(std::span<const grid_measurement> measurements,
                                           double band_lo_hz, double band_hi_hz,
                                           double tolerance_hz) {
  if (measurements.empty()) throw config_error("disambiguate_frequency: no measurements");
  if (!(band_lo_hz < band_hi_hz)) throw config_error("band_lo must be < band_hi");
  if (!(tolerance_hz > 0.0)) throw config_error("tolerance must be > 0");
  double min_spacing = std::numeric_limits<double>::infinity();
  for (const auto& m : measurements) {
    if (!(m.spacing_hz > 0.0)) throw config_error("grid spacing must be > 0");
    if (m.beat_hz < 0.0 || m.beat_hz > m.spacing_hz / 2.0 * (1.0 + 1e-9))
      throw config_error("measured beat must lie in [0, spacing/2]");
    min_spacing = std::min(min_spacing, m.spacing_hz);
  }

  auto err = [&](double f) {
    double worst = 0.0;
    for (const auto& m : measurements)
      worst = std::max(worst,
                       std::abs(fold_frequency(f, m.spacing_hz, m.offset_hz) - m.beat_hz));
    return worst;
  };

  const double width = band_hi_hz - band_lo_hz;
  double step = std::min({1.0, width / 200.0, min_spacing / 10.0});
  if (width / step > 2e7) step = width / 2e7;

  // coarse scan: a basin containing an exact match cannot be missed because the
  // error function is 1-Lipschitz, so slack = tolerance + step is always enough
  const double slack = tolerance_hz + step;
  const size_t n_pts = static_cast<size_t>(std::floor(width / step)) + 1;
  std::vector<std::pair<double, double>> basins;  // [lo, hi]
  double run_lo = 0.0, run_hi = 0.0;
  bool in_run = false;
  size_t last_hit = 0;
  for (size_t i = 0; i < n_pts; ++i) {
    const double f = band_lo_hz + step * static_cast<double>(i);
    if (err(f) <= slack) {
      if (in_run && i - last_hit <= 2) {
        run_hi = f;
      } else {
        if (in_run) basins.emplace_back(run_lo, run_hi);
        run_lo = run_hi = f;
        in_run = true;
      }
      last_hit = i;
    }
  }
  if (in_run) basins.emplace_back(run_lo, run_hi);

  std::vector<std::pair<double, double>> found;  // (freq, err)
  for (auto [lo, hi] : basins) {
    double a = std::max(band_lo_hz, lo - step);
    double b = std::min(band_hi_hz, hi + step);
    for (int it = 0; it < 200 && (b - a) > 1e-9; ++it) {
      const double m1 = a + (b - a) / 3.0;
      const double m2 = b - (b - a) / 3.0;
      if (err(m1) <= err(m2))
        b = m2;
      else
        a = m1;
    }
    const double f_star = (a + b) / 2.0;
    const double e_star = err(f_star);
    if (e_star <= tolerance_hz * (1.0 + 1e-9) + 1e-12) found.emplace_back(f_star, e_star);
  }

  std::sort(found.begin(), found.end());
  std::vector<double> out;
  const double merge_dist = std::max(step, tolerance_hz);
  for (const auto& [f, e] : found) {
    if (!out.empty() && std::abs(f - out.back()) <= merge_dist) continue;
    out.push_back(f);
  }
  return out;
}

linewidth_estimate beat_linewidth(const time_trace& trace, double f_center_hz) {
  check_trace(trace, 64);
  const double T = trace.duration_s();
  const double rbw = 1.0 / T;

  double span_c = 40.0 * rbw;
  double center = f_center_hz;
  const double nyq = trace.sample_rate_hz / 2.0;
  if (center - span_c / 2.0 <= 0.0) center = span_c / 2.0 + rbw;
  if (center + span_c / 2.0 >= nyq) center = nyq - span_c / 2.0 - rbw;
  auto coarse = zoom_amplitude_spectrum(trace, center, span_c, 129);
  size_t pk = 0;
  for (size_t i = 1; i < coarse.amplitude.size(); ++i)
    if (coarse.amplitude[i] > coarse.amplitude[pk]) pk = i;
  const double c1 = coarse.frequency_hz[pk];

  auto fine = zoom_amplitude_spectrum(trace, c1, 3.0 * rbw, 257);
  std::vector<double> sq(fine.amplitude.size());
  double sq_max = 0.0, sq_min = std::numeric_limits<double>::infinity();
  size_t i_max = 0;
  for (size_t i = 0; i < sq.size(); ++i) {
    sq[i] = fine.amplitude[i] * fine.amplitude[i];
    if (sq[i] > sq_max) {
      sq_max = sq[i];
      i_max = i;
    }
    sq_min = std::min(sq_min, sq[i]);
  }

  // the squared resolution lobe of a coherent line fits a Lorentzian well over ±1.5/T
  std::vector<lorentzian_line> init{{fine.frequency_hz[i_max], 0.875 * rbw, sq_max - sq_min}};
  auto fit = lorentzian_multifit(fine.frequency_hz, sq, 1, init);

  linewidth_estimate out;
  out.fwhm_hz = fit.lines[0].fwhm_hz;
  out.center_hz = fit.lines[0].center_hz;
  out.peak_amplitude = std::sqrt(std::max(0.0, fit.offset + fit.lines[0].height));
  out.converged = fit.converged;
  return out;
}

}  // namespace nvhet
