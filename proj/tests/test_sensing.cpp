#include "nvhet/sensing.hpp"

#include <cmath>

#include "doctest.h"
#include "nvhet/errors.hpp"
#include "nvhet/physics.hpp"

using namespace nvhet;

namespace {

const ensemble_params bench{};
const physical_constants consts{};

double b_for_gamma_ref(double gamma_ref) {
  // invert gamma_ref = (gamma b)^2 / (2 gamma2)
  return std::sqrt(2.0 * bench.gamma2_hz * gamma_ref) / consts.gamma_hz_per_t;
}

}  // namespace

TEST_CASE("shot-limited field sensitivity at the saturated point") {
  CHECK(shot_noise_sensitivity(bench, consts) ==
        doctest::Approx(1.15305359e-12).epsilon(1e-6));
  // averaging longer buys sqrt(t)
  CHECK(shot_noise_sensitivity(bench, consts, 100.0) ==
        doctest::Approx(1.15305359e-13).epsilon(1e-6));
}

TEST_CASE("single channel snr equals the multichannel form at m = 1") {
  operating_point op;
  const double a = analytic_snr(bench, consts, op, 6.81e-12, 1000.0);
  const double m = multichannel_snr(bench, consts, op, 1, 6.81e-12, 1000.0);
  CHECK(a == m);  // bit-for-bit, same code path
  CHECK(a > 0.0);
}

TEST_CASE("snr scales as sqrt(time) and linearly in small fields") {
  operating_point op;
  const double s1 = analytic_snr(bench, consts, op, 1e-12, 1.0);
  CHECK(analytic_snr(bench, consts, op, 1e-12, 4.0) == doctest::Approx(2.0 * s1));
  CHECK(analytic_snr(bench, consts, op, 2e-12, 1.0) == doctest::Approx(2.0 * s1));
}

TEST_CASE("saturation bound is met exactly at the matched point") {
  // at gamma_p = 3 m gamma_ref with negligible gamma1 and delta, the snr touches
  // the bound 3 sqrt(3) / (32 sqrt(m)) * contrast * sqrt(n k gamma_sig t)
  ensemble_params p = bench;
  p.gamma1_hz = 1e-9;
  for (int m : {1, 4, 16}) {
    const double gamma_ref = 100.0;
    operating_point op;
    op.laser_power_w = 3.0 * m * gamma_ref / p.pump_coeff_hz_per_w;
    op.reference_b_tesla = b_for_gamma_ref(gamma_ref);
    op.delta_hz = 1e-6;
    op.channels = m;
    const double snr = multichannel_snr(p, consts, op, m, 1e-12, 1.0);
    const double limit = snr_saturation_limit(p, consts, 1e-12, 1.0, m);
    CHECK(snr == doctest::Approx(limit).epsilon(1e-6));
  }
  CHECK(3.0 * std::sqrt(3.0) / 32.0 == doctest::Approx(0.16237976).epsilon(1e-7));
}

TEST_CASE("saturation limit bounds the snr over an operating grid") {
  const double limit = snr_saturation_limit(bench, consts, 1e-12, 1.0, 1);
  for (int i = 1; i <= 20; ++i) {
    for (int j = 1; j <= 20; ++j) {
      operating_point op;
      op.laser_power_w = 0.05 * i;            // gamma_p = 12.5 .. 250
      op.reference_b_tesla = 3e-8 * j;        // gamma_ref = 1.47 .. 587
      op.delta_hz = 1e-6;
      const double snr = analytic_snr(bench, consts, op, 1e-12, 1.0);
      CHECK(snr <= limit * (1.0 + 1e-9));
    }
  }
  // the sqrt(m) collapse of the bound itself
  CHECK(snr_saturation_limit(bench, consts, 1e-12, 1.0, 9) * 3.0 ==
        doctest::Approx(limit).epsilon(1e-12));
}

TEST_CASE("snr is stationary at the known reference saturation") {
  // at delta = 0 the optimum sits at gamma_ref = (gamma_p + gamma1) / 3
  operating_point op;
  op.delta_hz = 1e-9;
  op.reference_b_tesla = b_for_gamma_ref(102.0);
  const double center = analytic_snr(bench, consts, op, 1e-12, 1.0);
  operating_point lo = op, hi = op;
  lo.reference_b_tesla = b_for_gamma_ref(102.0 * 0.998);
  hi.reference_b_tesla = b_for_gamma_ref(102.0 * 1.002);
  CHECK(analytic_snr(bench, consts, lo, 1e-12, 1.0) <= center);
  CHECK(analytic_snr(bench, consts, hi, 1e-12, 1.0) <= center);

  // at delta = 480 the optimum moves up; solves 1/(2 g) = 1/s + s/(s^2 + d^2)
  operating_point op480;
  op480.delta_hz = 480.0;
  op480.reference_b_tesla = b_for_gamma_ref(155.982430);
  const double c480 = analytic_snr(bench, consts, op480, 1e-12, 1.0);
  operating_point lo4 = op480, hi4 = op480;
  lo4.reference_b_tesla = b_for_gamma_ref(155.982430 * 0.998);
  hi4.reference_b_tesla = b_for_gamma_ref(155.982430 * 1.002);
  CHECK(analytic_snr(bench, consts, lo4, 1e-12, 1.0) <= c480);
  CHECK(analytic_snr(bench, consts, hi4, 1e-12, 1.0) <= c480);
}

TEST_CASE("optimizer finds the stationary reference field") {
  operating_point start;  // 220 nT, delta 480
  const auto res = optimize_operating_point(bench, consts, start, 1e-12, 1.0,
                                            {0.8159, 0.8161}, {5e-8, 1e-6});
  REQUIRE(res.converged);
  const double gamma_ref_opt =
      induced_relaxation(drive_rate(res.point.reference_b_tesla, consts), bench.gamma2_hz);
  CHECK(gamma_ref_opt == doctest::Approx(155.982430).epsilon(5e-3));
  CHECK(res.snr >= analytic_snr(bench, consts, start, 1e-12, 1.0));
  CHECK(res.point.laser_power_w == doctest::Approx(0.816).epsilon(1e-3));
}

TEST_CASE("multichannel beat amplitude reduces to the single-tone response") {
  const double a1 = multichannel_beat_amplitude(204.0, 102.0, 78.894099, 1, 2.183541, 480.0);
  const auto resp = heterodyne_amplitude(204.0, 102.0, 78.894099, 2.183541, 480.0);
  CHECK(a1 == doctest::Approx(resp.amplitude).epsilon(1e-12));

  // more channels load the line and shrink the per-channel response
  const double a4 = multichannel_beat_amplitude(204.0, 102.0, 78.894099, 4, 2.183541, 480.0);
  CHECK(a4 < a1);
  const double sigma4 = 204.0 + 102.0 + 4.0 * 78.894099;
  const double expected4 = 204.0 * std::sqrt(78.894099 * 2.183541) /
                           (sigma4 * std::sqrt(sigma4 * sigma4 + 480.0 * 480.0));
  CHECK(a4 == doctest::Approx(expected4).epsilon(1e-12));
}

TEST_CASE("reference grid planning covers a band") {
  operating_point op;
  const auto plan = plan_reference_grid(0.0, 1e5, bench, consts, op, 128);
  CHECK(plan.spacing_hz == doctest::Approx(3.0 * 666.656134).epsilon(1e-6));
  CHECK(plan.channels == 51);  // ceil(1e5 / 1999.97)
  REQUIRE(plan.frequencies_hz.size() == 51);
  CHECK(plan.frequencies_hz.front() == doctest::Approx(plan.spacing_hz / 2.0));
  // every in-band frequency sits within half a spacing of some channel
  CHECK(plan.frequencies_hz.back() > 1e5 - plan.spacing_hz);
  CHECK(plan.snr_penalty == doctest::Approx(std::sqrt(51.0)).epsilon(1e-12));
  CHECK_FALSE(plan.coverage_warning);
  // 51 channels at the bench reference field add coherently past gamma2/3
  CHECK_FALSE(plan.weak_drive_ok);
  operating_point weak = op;
  weak.reference_b_tesla = 2.2e-8;
  CHECK(plan_reference_grid(0.0, 1e5, bench, consts, weak, 128).weak_drive_ok);

  CHECK_THROWS_AS(plan_reference_grid(0.0, 1e5, bench, consts, op, 40), config_error);

  const auto wide = plan_reference_grid(0.0, 6e5, bench, consts, op, 1024);
  CHECK(wide.coverage_warning);  // wider than the sensor line can follow

  const auto hinted = plan_reference_grid(0.0, 1e5, bench, consts, op, 128, 4000.0);
  CHECK(hinted.channels == 25);
}

TEST_CASE("operating point validation") {
  operating_point op;
  CHECK_NOTHROW(op.validate(bench, consts));
  op.channels = 4096;
  // 4096 channels at 220 nT blow through the weak-drive budget
  CHECK_THROWS_AS(op.validate(bench, consts), config_error);
  op.channels = 0;
  CHECK_THROWS_AS(op.validate(bench, consts), config_error);
}
