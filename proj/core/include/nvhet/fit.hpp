#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace nvhet {

struct least_squares_options {
  int max_iterations = 500;
  double relative_tolerance = 1e-10;  // stop when the rms residual stalls
  double jacobian_step = 1e-6;        // central-difference step, scaled per parameter
};

struct least_squares_result {
  std::vector<double> params;
  double rms_residual = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> covariance;  // row-major p x p, scaled by residual variance
};

// damped Gauss-Newton (Levenberg style) on a residual vector; `residuals` fills
// r with n_residuals entries for the given parameter vector
least_squares_result fit_least_squares(
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& residuals,
    size_t n_residuals, std::vector<double> initial,
    const least_squares_options& opts = {});

}  // namespace nvhet
