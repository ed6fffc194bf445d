#include "nvhet/sensing.hpp"

#include <algorithm>
#include <cmath>

#include "nvhet/errors.hpp"
#include "nvhet/physics.hpp"

namespace nvhet {

namespace {

constexpr double kGolden = 0.6180339887498949;

void check_channels(int channels) {
  if (channels < 1 || channels > 4096)
    throw config_error("channel count must be in [1, 4096]");
}

double golden_max(double lo, double hi, int iters, const auto& f, double& best_x) {
  double a = lo, b = hi;
  double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = f(x1);
    }
  }
  best_x = (a + b) / 2.0;
  return f(best_x);
}

}  // namespace

void operating_point::validate(const ensemble_params& params,
                               const physical_constants& consts) const {
  params.validate();
  consts.validate();
  if (!(laser_power_w > 0.0) || !std::isfinite(laser_power_w))
    throw config_error("laser_power_w must be > 0");
  if (!(reference_b_tesla > 0.0) || !std::isfinite(reference_b_tesla))
    throw config_error("reference_b_tesla must be > 0");
  if (!(delta_hz > 0.0) || !std::isfinite(delta_hz))
    throw config_error("delta_hz must be > 0");
  check_channels(channels);
  // summed reference drive must stay linear in the rate model
  const double g_total =
      drive_rate(reference_b_tesla, consts) * static_cast<double>(channels);
  if (g_total > params.gamma2_hz / 3.0)
    throw config_error("summed reference drive exceeds the weak-drive bound gamma2/3");
}

double multichannel_beat_amplitude(double gamma_p_hz, double gamma1_hz,
                                   double gamma_ref_per_channel_hz, int channels,
                                   double gamma_sig_hz, double delta_hz) {
  check_channels(channels);
  if (!(gamma_p_hz > 0.0) || !(gamma1_hz >= 0.0) || !(gamma_ref_per_channel_hz >= 0.0) ||
      !(gamma_sig_hz >= 0.0) || !std::isfinite(delta_hz))
    throw config_error("beat amplitude rates must be finite and nonnegative");
  const double sigma =
      gamma_p_hz + gamma1_hz + static_cast<double>(channels) * gamma_ref_per_channel_hz;
  return gamma_p_hz * std::sqrt(gamma_ref_per_channel_hz * gamma_sig_hz) /
         (sigma * std::sqrt(sigma * sigma + delta_hz * delta_hz));
}

double multichannel_snr(const ensemble_params& params, const physical_constants& consts,
                        const operating_point& op, int channels, double signal_b_tesla,
                        double t_s) {
  check_channels(channels);
  if (!(signal_b_tesla > 0.0) || !std::isfinite(signal_b_tesla))
    throw config_error("signal_b_tesla must be > 0");
  if (!(t_s > 0.0) || !std::isfinite(t_s)) throw config_error("t_s must be > 0");

  const double gamma_p = pump_rate(op.laser_power_w, params);
  const double gamma_ref =
      induced_relaxation(drive_rate(op.reference_b_tesla, consts), params.gamma2_hz);
  const double gamma_sig =
      induced_relaxation(drive_rate(signal_b_tesla, consts), params.gamma2_hz);
  const double sigma =
      gamma_p + params.gamma1_hz + static_cast<double>(channels) * gamma_ref;
  return gamma_p * std::sqrt(gamma_p * gamma_ref) * params.contrast *
         std::sqrt(params.n_emitters * params.collection_k * gamma_sig * t_s) /
         (2.0 * sigma * std::sqrt(sigma * sigma + op.delta_hz * op.delta_hz));
}

double analytic_snr(const ensemble_params& params, const physical_constants& consts,
                    const operating_point& op, double signal_b_tesla, double t_s) {
  return multichannel_snr(params, consts, op, 1, signal_b_tesla, t_s);
}

double snr_saturation_limit(const ensemble_params& params, const physical_constants& consts,
                            double signal_b_tesla, double t_s, int channels) {
  check_channels(channels);
  if (!(signal_b_tesla > 0.0) || !(t_s > 0.0))
    throw config_error("signal field and time must be > 0");
  const double gamma_sig =
      induced_relaxation(drive_rate(signal_b_tesla, consts), params.gamma2_hz);
  return 3.0 * std::sqrt(3.0) / (32.0 * std::sqrt(static_cast<double>(channels))) *
         params.contrast *
         std::sqrt(params.n_emitters * params.collection_k * gamma_sig * t_s);
}

double shot_noise_sensitivity(const ensemble_params& params,
                              const physical_constants& consts, double t_s) {
  if (!(t_s > 0.0) || !std::isfinite(t_s)) throw config_error("t_s must be > 0");
  params.validate();
  consts.validate();
  return 32.0 * std::sqrt(2.0) / (3.0 * std::sqrt(3.0) * params.contrast) *
         std::sqrt(params.gamma2_hz /
                   (params.n_emitters * params.collection_k * t_s)) /
         consts.gamma_hz_per_t;
}

optimize_result optimize_operating_point(const ensemble_params& params,
                                         const physical_constants& consts,
                                         const operating_point& start,
                                         double signal_b_tesla, double t_s,
                                         search_box power_box, search_box reference_box) {
  if (!(power_box.lo > 0.0) || !(power_box.hi > power_box.lo))
    throw config_error("power box must satisfy 0 < lo < hi");
  if (!(reference_box.lo > 0.0) || !(reference_box.hi > reference_box.lo))
    throw config_error("reference box must satisfy 0 < lo < hi");

  optimize_result out;
  out.point = start;

  // stay strictly inside the weak-drive validity region
  const double b_bound = std::sqrt(2.0) * params.gamma2_hz /
                         (3.0 * consts.gamma_hz_per_t *
                          static_cast<double>(start.channels)) * 0.999;
  if (reference_box.hi > b_bound) {
    reference_box.hi = b_bound;
    out.clamped = true;
    if (!(reference_box.lo < reference_box.hi))
      throw config_error("reference box lies beyond the weak-drive bound");
  }

  auto snr_at = [&](double power, double b_ref) {
    operating_point op = start;
    op.laser_power_w = power;
    op.reference_b_tesla = b_ref;
    return multichannel_snr(params, consts, op, start.channels, signal_b_tesla, t_s);
  };

  double power = std::clamp(start.laser_power_w, power_box.lo, power_box.hi);
  double b_ref = std::clamp(start.reference_b_tesla, reference_box.lo, reference_box.hi);
  double best = snr_at(power, b_ref);
  constexpr int kRounds = 6, kIters = 90;
  for (int round = 0; round < kRounds; ++round) {
    best = golden_max(power_box.lo, power_box.hi, kIters,
                      [&](double p) { return snr_at(p, b_ref); }, power);
    best = golden_max(reference_box.lo, reference_box.hi, kIters,
                      [&](double b) { return snr_at(power, b); }, b_ref);
    out.iterations += 2 * kIters;
  }
  out.point.laser_power_w = power;
  out.point.reference_b_tesla = b_ref;
  out.snr = best;
  out.converged = true;
  return out;
}

grid_plan plan_reference_grid(double band_lo_hz, double band_hi_hz,
                              const ensemble_params& params,
                              const physical_constants& consts, const operating_point& op,
                              int max_channels, double spacing_hint_hz) {
  if (!(band_lo_hz >= 0.0) || !(band_hi_hz > band_lo_hz))
    throw config_error("need 0 <= band_lo < band_hi");
  if (max_channels < 1) throw config_error("max_channels must be >= 1");
  params.validate();
  consts.validate();

  const double gamma_p = pump_rate(op.laser_power_w, params);
  const double gamma_ref =
      induced_relaxation(drive_rate(op.reference_b_tesla, consts), params.gamma2_hz);

  grid_plan plan;
  plan.spacing_hz = spacing_hint_hz > 0.0
                        ? spacing_hint_hz
                        : 3.0 * bandwidth_3db(gamma_p, params.gamma1_hz, gamma_ref);
  const double width = band_hi_hz - band_lo_hz;
  const int m = static_cast<int>(std::ceil(width / plan.spacing_hz - 1e-12));
  plan.channels = std::max(1, m);
  if (plan.channels > max_channels)
    throw config_error("band needs " + std::to_string(plan.channels) +
                       " channels but max_channels is " + std::to_string(max_channels));

  plan.frequencies_hz.resize(static_cast<size_t>(plan.channels));
  for (int j = 0; j < plan.channels; ++j)
    plan.frequencies_hz[static_cast<size_t>(j)] =
        (static_cast<double>(j) + 0.5) * plan.spacing_hz;
  plan.snr_penalty = std::sqrt(static_cast<double>(plan.channels));
  plan.coverage_warning = width > 2.0 * params.gamma2_hz;
  plan.weak_drive_ok = drive_rate(op.reference_b_tesla, consts) *
                           static_cast<double>(plan.channels) <=
                       params.gamma2_hz / 3.0;
  return plan;
}

}  // namespace nvhet
