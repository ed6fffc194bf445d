#include "nvhet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "nvhet/errors.hpp"
#include "nvhet/physics.hpp"

namespace nvhet {

namespace {

double total_amplitude(std::span<const microwave_tone> tones) {
  double sum = 0.0;
  for (const auto& t : tones) sum += t.amplitude_tesla;
  return sum;
}

// worst-case drive-induced relaxation: all tones momentarily in phase
double peak_relaxation(std::span<const microwave_tone> tones, double gamma2_hz,
                       const physical_constants& consts) {
  const double g_peak = consts.gamma_hz_per_t * total_amplitude(tones) / std::sqrt(2.0);
  return g_peak * g_peak / gamma2_hz;
}

}  // namespace

double drive_scenario::resolved_line_center(const physical_constants& consts) const {
  return line_center_hz > 0.0 ? line_center_hz : consts.zero_field_splitting_hz;
}

bool drive_scenario::drive_on(double t_s) const {
  if (gates.empty()) return true;
  for (const auto& g : gates)
    if (t_s >= g.on_s && t_s < g.off_s) return true;
  return false;
}

void drive_scenario::validate(const ensemble_params& params,
                              const physical_constants& consts) const {
  params.validate();
  consts.validate();
  if (!(duration_s > 0.0) || !std::isfinite(duration_s))
    throw config_error("duration_s must be > 0");
  if (!std::isfinite(laser_power_w) || laser_power_w < 0.0)
    throw config_error("laser_power_w must be >= 0");
  if (initial_p0 > 1.0) throw config_error("initial_p0 must be <= 1");
  if (line_center_hz < 0.0 || !std::isfinite(line_center_hz))
    throw config_error("line_center_hz must be >= 0");

  const double center = resolved_line_center(consts);
  for (const auto& t : tones) {
    t.validate();
    // the envelope picture keeps no per-tone lineshape; stay well inside the line
    if (std::abs(t.frequency_hz - center) > params.gamma2_hz)
      throw config_error("tone detuned beyond gamma2 from the line center");
  }
  const double g_peak = consts.gamma_hz_per_t * total_amplitude(tones) / std::sqrt(2.0);
  if (g_peak > params.gamma2_hz / 3.0)
    throw config_error("summed drive amplitude exceeds the weak-drive bound gamma2/3");

  if (simplified_envelope) {
    if (tones.size() != 2)
      throw config_error("simplified_envelope requires exactly two tones");
    if (tones[1].amplitude_tesla > 0.5 * tones[0].amplitude_tesla)
      throw config_error("simplified_envelope requires the signal tone <= half the reference");
  }

  double prev_off = 0.0;
  for (const auto& g : gates) {
    if (!(g.on_s < g.off_s)) throw config_error("gate window must have on_s < off_s");
    if (g.on_s < prev_off) throw config_error("gate windows must be sorted and disjoint");
    if (g.off_s > duration_s) throw config_error("gate window extends past duration_s");
    prev_off = g.off_s;
  }
}

double interference_envelope(const microwave_tone& ref, const microwave_tone& sig,
                             double t_s, bool simplified) {
  const double delta = ref.frequency_hz - sig.frequency_hz;
  const double phase = ref.phase_rad - sig.phase_rad;
  const double cross = 2.0 * ref.amplitude_tesla * sig.amplitude_tesla *
                       std::cos(delta * t_s + phase);
  double sq = ref.amplitude_tesla * ref.amplitude_tesla + cross;
  if (!simplified) sq += sig.amplitude_tesla * sig.amplitude_tesla;
  if (sq < 0.0)
    throw numeric_error("simplified envelope went negative; signal tone too strong");
  return std::sqrt(sq);
}

double instantaneous_relaxation(std::span<const microwave_tone> tones, double gamma2_hz,
                                double t_s, const physical_constants& consts,
                                bool simplified) {
  if (gamma2_hz <= 0.0) throw config_error("gamma2_hz must be > 0");
  if (tones.empty()) return 0.0;
  double env;
  if (tones.size() == 2) {
    env = interference_envelope(tones[0], tones[1], t_s, simplified);
  } else {
    if (simplified) throw config_error("simplified envelope is a two-tone form");
    // common rotating frame at tones[0]; absolute carrier frequency drops out
    const double f0 = tones[0].frequency_hz;
    double re = 0.0, im = 0.0;
    for (const auto& t : tones) {
      const double arg = (t.frequency_hz - f0) * t_s + t.phase_rad;
      re += t.amplitude_tesla * std::cos(arg);
      im += t.amplitude_tesla * std::sin(arg);
    }
    env = std::hypot(re, im);
  }
  const double g = consts.gamma_hz_per_t * env / std::sqrt(2.0);
  return g * g / gamma2_hz;
}

double max_beat_rate(std::span<const microwave_tone> tones) {
  if (tones.size() < 2) return 0.0;
  auto [lo, hi] = std::minmax_element(
      tones.begin(), tones.end(),
      [](const auto& a, const auto& b) { return a.frequency_hz < b.frequency_hz; });
  return hi->frequency_hz - lo->frequency_hz;
}

double recommended_step(const drive_scenario& scenario, const ensemble_params& params,
                        const physical_constants& consts) {
  const double gamma_p = pump_rate(scenario.laser_power_w, params);
  const double relax = gamma_p + params.gamma1_hz +
                       peak_relaxation(scenario.tones, params.gamma2_hz, consts);
  const double f_max = std::max(max_beat_rate(scenario.tones), relax);
  return 1.0 / (20.0 * f_max);
}

population_trajectory integrate_rate_equation(const drive_scenario& scenario,
                                              const ensemble_params& params,
                                              const physical_constants& consts,
                                              double step_s, size_t record_stride) {
  scenario.validate(params, consts);
  if (record_stride == 0) throw config_error("record_stride must be >= 1");

  const double bound = recommended_step(scenario, params, consts);
  double h = step_s > 0.0 ? step_s : bound;
  if (h > bound * (1.0 + 1e-9))
    throw numeric_error("integration step " + std::to_string(h) +
                        " s exceeds the stability bound " + std::to_string(bound) + " s");

  const double dt_rec = h * static_cast<double>(record_stride);
  const size_t n_rec = static_cast<size_t>(std::floor(scenario.duration_s / dt_rec + 1e-9)) + 1;
  if (n_rec < 2) throw config_error("duration_s shorter than one recording interval");
  const double total_steps = static_cast<double>(n_rec - 1) * static_cast<double>(record_stride);
  if (total_steps > 1e9)
    throw numeric_error("run needs " + std::to_string(total_steps) +
                        " integration steps; limit is 1e9");

  const double gamma_p = pump_rate(scenario.laser_power_w, params);
  const double gamma1 = params.gamma1_hz;
  const double gamma_coeff =
      consts.gamma_hz_per_t * consts.gamma_hz_per_t / (2.0 * params.gamma2_hz);

  // tone phasors in the tones[0] rotating frame, advanced by half-step rotations so the
  // envelope at RK4 stage times costs one complex multiply per tone
  const size_t n_tones = scenario.tones.size();
  const double f0 = n_tones ? scenario.tones[0].frequency_hz : 0.0;
  std::vector<std::complex<double>> cur(n_tones), rot_half(n_tones);
  std::vector<double> rel_rate(n_tones), phase0(n_tones), amp(n_tones);
  for (size_t j = 0; j < n_tones; ++j) {
    const auto& t = scenario.tones[j];
    rel_rate[j] = t.frequency_hz - f0;
    phase0[j] = t.phase_rad;
    amp[j] = t.amplitude_tesla;
    rot_half[j] = std::polar(1.0, rel_rate[j] * h / 2.0);
  }
  const bool drop_sig_power = scenario.simplified_envelope;
  const double sig_power =
      n_tones == 2 ? amp[1] * amp[1] : 0.0;  // subtracted in the simplified form

  auto reseed_phasors = [&](double t) {
    for (size_t j = 0; j < n_tones; ++j)
      cur[j] = std::polar(amp[j], std::remainder(rel_rate[j] * t + phase0[j], 2.0 * kPi));
  };

  auto env_sq = [&](const std::vector<std::complex<double>>& bank) {
    std::complex<double> e{0.0, 0.0};
    for (const auto& c : bank) e += c;
    double sq = std::norm(e);
    if (drop_sig_power) sq -= sig_power;
    return sq < 0.0 ? 0.0 : sq;
  };

  auto rhs = [&](double p, double gamma_drive) {
    return -(gamma1 + gamma_drive) * (p - 0.5) + gamma_p * (1.0 - p);
  };

  population_trajectory traj;
  traj.dt_s = dt_rec;
  traj.step_s = h;
  traj.settle_rate_hz = gamma1 + gamma_p;
  traj.p0.reserve(n_rec);

  double p = scenario.initial_p0 < 0.0 ? equilibrium_population(gamma_p, gamma1, 0.0)
                                       : scenario.initial_p0;
  traj.p0.push_back(p);
  reseed_phasors(0.0);

  std::vector<std::complex<double>> mid(n_tones), end(n_tones);
  size_t step_index = 0;
  for (size_t rec = 1; rec < n_rec; ++rec) {
    for (size_t s = 0; s < record_stride; ++s, ++step_index) {
      const double t = static_cast<double>(step_index) * h;
      if ((step_index & 0xffff) == 0) reseed_phasors(t);  // kill rotation round-off drift
      for (size_t j = 0; j < n_tones; ++j) {
        mid[j] = cur[j] * rot_half[j];
        end[j] = mid[j] * rot_half[j];
      }
      const double g_a = scenario.drive_on(t) && n_tones ? gamma_coeff * env_sq(cur) : 0.0;
      const double g_m =
          scenario.drive_on(t + 0.5 * h) && n_tones ? gamma_coeff * env_sq(mid) : 0.0;
      const double g_e = scenario.drive_on(t + h) && n_tones ? gamma_coeff * env_sq(end) : 0.0;

      const double k1 = rhs(p, g_a);
      const double k2 = rhs(p + 0.5 * h * k1, g_m);
      const double k3 = rhs(p + 0.5 * h * k2, g_m);
      const double k4 = rhs(p + h * k3, g_e);
      p += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
      cur.swap(end);
    }
    traj.p0.push_back(p);
  }
  return traj;
}

oscillation_fit steady_state_oscillation(const population_trajectory& traj, double cycle_hz) {
  if (!(cycle_hz > 0.0) || !std::isfinite(cycle_hz))
    throw config_error("cycle_hz must be > 0");
  if (traj.p0.size() < 8 || traj.dt_s <= 0.0)
    throw config_error("trajectory too short for an oscillation fit");
  if (traj.dt_s * cycle_hz > 0.45)
    throw numeric_error("trajectory undersamples the requested cycle frequency");

  const double settle_s = traj.settle_rate_hz > 0.0 ? 7.0 / traj.settle_rate_hz : 0.0;
  const double span_s = traj.duration_s();
  const double period = 1.0 / cycle_hz;
  const double avail = span_s - settle_s;
  if (avail < 10.0 * period)
    throw numeric_error("trajectory leaves fewer than 10 settled cycles to fit");

  // whole cycles only: partial-cycle tails bias the small-amplitude fit
  const double n_cycles = std::floor(avail / period);
  const double t_start = span_s - n_cycles * period;
  size_t i0 = static_cast<size_t>(std::ceil(t_start / traj.dt_s - 1e-9));
  if (i0 >= traj.p0.size() - 4) i0 = traj.p0.size() - 4;

  const double w = 2.0 * kPi * cycle_hz;
  const double tail0_abs = traj.time_at(i0);
  double scc = 0.0, scs = 0.0, sss = 0.0, sc = 0.0, ss = 0.0, n = 0.0;
  double syc = 0.0, sys = 0.0, sy = 0.0;
  for (size_t i = i0; i < traj.p0.size(); ++i) {
    const double t = traj.dt_s * static_cast<double>(i - i0);
    const double c = std::cos(w * t), s = std::sin(w * t);
    const double y = traj.p0[i];
    scc += c * c; scs += c * s; sss += s * s;
    sc += c; ss += s; n += 1.0;
    syc += y * c; sys += y * s; sy += y;
  }
  // 3x3 normal equations for [a, b, c] via elimination with partial pivoting
  double m[3][4] = {{scc, scs, sc, syc}, {scs, sss, ss, sys}, {sc, ss, n, sy}};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    std::swap(m[col], m[piv]);
    if (m[col][col] == 0.0) throw numeric_error("singular oscillation-fit system");
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int cc = col; cc < 4; ++cc) m[r][cc] -= f * m[col][cc];
    }
  }
  const double a = m[0][3] / m[0][0];
  const double b = m[1][3] / m[1][1];
  const double c = m[2][3] / m[2][2];

  oscillation_fit out;
  out.amplitude = std::hypot(a, b);
  out.offset = c;
  double phase = std::atan2(-b, a) - w * tail0_abs;
  phase = std::fmod(phase, 2.0 * kPi);
  if (phase < 0.0) phase += 2.0 * kPi;
  out.phase_rad = phase;
  out.tail_samples = traj.p0.size() - i0;
  return out;
}

}  // namespace nvhet
