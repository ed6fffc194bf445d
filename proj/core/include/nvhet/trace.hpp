#pragma once

#include <cstdint>
#include <vector>

namespace nvhet {

// uniformly sampled detector-voltage record
struct time_trace {
  double sample_rate_hz = 0.0;
  double t0_s = 0.0;
  std::vector<double> volts;
  uint64_t seed = 0;
  uint64_t scenario_hash = 0;  // provenance fingerprint, 0 if unknown

  double duration_s() const {
    return sample_rate_hz > 0.0 ? static_cast<double>(volts.size()) / sample_rate_hz : 0.0;
  }
  double time_at(size_t i) const {
    return t0_s + static_cast<double>(i) / sample_rate_hz;
  }
};

}  // namespace nvhet
