#pragma once

#include <string>
#include <vector>

namespace nvhet {

// one-sided amplitude spectrum: `amplitude[k]` is the peak amplitude a pure
// sinusoid at frequency_hz[k] would need to produce that bin (bin 0 holds the mean)
struct spectrum {
  std::vector<double> frequency_hz;
  std::vector<double> amplitude;
  double duration_s = 0.0;   // time span of the transformed record
  std::string window = "rect";
};

}  // namespace nvhet
