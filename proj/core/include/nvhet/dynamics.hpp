#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nvhet/constants.hpp"
#include "nvhet/params.hpp"

namespace nvhet {

// microwave drive enabled on [on_s, off_s)
struct gate_window {
  double on_s = 0.0;
  double off_s = 0.0;
};

// a continuous-drive experiment: tones, pump power, duration, optional gating.
// tones[0] is the reference (local-oscillator) tone wherever that distinction matters.
struct drive_scenario {
  std::vector<microwave_tone> tones;
  double laser_power_w = kBenchLaserPowerW;
  double duration_s = 1.0;
  double initial_p0 = -1.0;          // < 0: start from the drive-free equilibrium
  double line_center_hz = 0.0;       // 0: use the zero-field splitting
  bool simplified_envelope = false;  // two tones: drop the weak tone's own-power term
  std::vector<gate_window> gates;    // empty = drive always on

  void validate(const ensemble_params& params, const physical_constants& consts) const;
  bool drive_on(double t_s) const;
  double resolved_line_center(const physical_constants& consts) const;
};

// magnitude of the two-tone field envelope at time t:
//   sqrt(B^2 + b^2 + 2*B*b*cos(delta*t + phase_ref - phase_sig)), delta = f_ref - f_sig.
// simplified drops the b^2 term (requires b <= B/2 so the radicand stays nonnegative)
double interference_envelope(const microwave_tone& ref, const microwave_tone& sig,
                             double t_s, bool simplified = false);

// total drive-induced relaxation of an n-tone field at time t:
// gamma^2 * envelope^2 / (2*gamma2), envelope taken in a common rotating frame
double instantaneous_relaxation(std::span<const microwave_tone> tones, double gamma2_hz,
                                double t_s, const physical_constants& consts,
                                bool simplified = false);

// largest pairwise tone-frequency difference (0 for fewer than two tones)
double max_beat_rate(std::span<const microwave_tone> tones);

// stability/accuracy step bound: 1/(20 * max(beat rate, pump+relaxation rate scale))
double recommended_step(const drive_scenario& scenario, const ensemble_params& params,
                        const physical_constants& consts);

// bright-state population sampled every dt_s = step_s * record_stride
struct population_trajectory {
  double t0_s = 0.0;
  double dt_s = 0.0;
  std::vector<double> p0;
  double step_s = 0.0;          // integrator step actually used
  double settle_rate_hz = 0.0;  // guaranteed slowest relaxation rate of the run
  std::string method = "rk4";

  double time_at(size_t i) const { return t0_s + dt_s * static_cast<double>(i); }
  double duration_s() const { return p0.empty() ? 0.0 : dt_s * static_cast<double>(p0.size() - 1); }
};

// classical fixed-step RK4 on dp/dt = -(gamma1+Gamma(t))*(p-1/2) + gamma_p*(1-p).
// step_s <= 0 picks the recommended step; larger steps than the bound are rejected
population_trajectory integrate_rate_equation(const drive_scenario& scenario,
                                              const ensemble_params& params,
                                              const physical_constants& consts,
                                              double step_s = 0.0, size_t record_stride = 1);

// least-squares a*cos + b*sin + c over the settled whole-cycle tail of a trajectory;
// cycle_hz is in cycles per second (a beat written cos(delta*t) has cycle_hz = delta/2pi)
struct oscillation_fit {
  double amplitude = 0.0;
  double phase_rad = 0.0;  // phase of cos(2*pi*cycle_hz*t + phase) at absolute t = 0
  double offset = 0.0;
  size_t tail_samples = 0;
};
oscillation_fit steady_state_oscillation(const population_trajectory& traj, double cycle_hz);

}  // namespace nvhet
