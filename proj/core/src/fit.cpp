#include "nvhet/fit.hpp"

#include <cmath>
#include <limits>

#include "nvhet/errors.hpp"

namespace nvhet {

namespace {

// dense symmetric solve via Gaussian elimination with partial pivoting;
// a is row-major n x n and is destroyed
bool solve_inplace(std::vector<double>& a, std::vector<double>& b, size_t n) {
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (a[piv * n + col] == 0.0) return false;
    if (piv != col) {
      for (size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    for (size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  for (size_t i = 0; i < n; ++i) b[i] /= a[i * n + i];
  return true;
}

double rms(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return std::sqrt(s / static_cast<double>(r.size()));
}

}  // namespace

least_squares_result fit_least_squares(
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& residuals,
    size_t n_residuals, std::vector<double> initial, const least_squares_options& opts) {
  const size_t np = initial.size();
  if (np == 0) throw config_error("fit_least_squares: no parameters");
  if (n_residuals < np) throw config_error("fit_least_squares: fewer residuals than parameters");

  std::vector<double> p = std::move(initial);
  std::vector<double> r(n_residuals), r_hi(n_residuals), r_lo(n_residuals);
  std::vector<double> jac(n_residuals * np);
  std::vector<double> jtj(np * np), jtr(np), step(np), trial(np), r_trial(n_residuals);

  residuals(p, r);
  double cost = rms(r);
  if (!std::isfinite(cost)) throw numeric_error("fit_least_squares: non-finite initial residual");

  least_squares_result out;
  double lambda = 1e-3;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    // central-difference Jacobian, step scaled to parameter magnitude
    for (size_t j = 0; j < np; ++j) {
      const double h = opts.jacobian_step * std::max(std::abs(p[j]), 1.0);
      const double save = p[j];
      p[j] = save + h;
      residuals(p, r_hi);
      p[j] = save - h;
      residuals(p, r_lo);
      p[j] = save;
      for (size_t i = 0; i < n_residuals; ++i)
        jac[i * np + j] = (r_hi[i] - r_lo[i]) / (2.0 * h);
    }
    for (size_t a = 0; a < np; ++a) {
      jtr[a] = 0.0;
      for (size_t b = a; b < np; ++b) {
        double s = 0.0;
        for (size_t i = 0; i < n_residuals; ++i) s += jac[i * np + a] * jac[i * np + b];
        jtj[a * np + b] = s;
        jtj[b * np + a] = s;
      }
      double s = 0.0;
      for (size_t i = 0; i < n_residuals; ++i) s += jac[i * np + a] * r[i];
      jtr[a] = s;
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 16 && !stepped; ++attempt) {
      std::vector<double> lhs = jtj;
      for (size_t a = 0; a < np; ++a) lhs[a * np + a] += lambda * (jtj[a * np + a] + 1e-300);
      step = jtr;
      if (!solve_inplace(lhs, step, np)) {
        lambda *= 10.0;
        continue;
      }
      for (size_t a = 0; a < np; ++a) trial[a] = p[a] - step[a];
      residuals(trial, r_trial);
      const double trial_cost = rms(r_trial);
      if (std::isfinite(trial_cost) && trial_cost <= cost) {
        const double improvement = cost > 0.0 ? (cost - trial_cost) / cost : 0.0;
        p = trial;
        r = r_trial;
        cost = trial_cost;
        lambda = std::max(lambda * 0.1, 1e-12);
        stepped = true;
        if (improvement < opts.relative_tolerance || cost == 0.0) {
          out.converged = true;
          ++it;
        }
      } else {
        lambda *= 10.0;
      }
    }
    if (!stepped) {
      // no downhill step found at any damping: treat the current point as converged
      out.converged = true;
    }
    if (out.converged) break;
  }

  out.params = p;
  out.rms_residual = cost;
  out.iterations = it;

  // covariance = (J^T J)^-1 * residual variance, from the last Jacobian
  out.covariance.assign(np * np, 0.0);
  const double dof = static_cast<double>(n_residuals > np ? n_residuals - np : 1);
  const double var = cost * cost * static_cast<double>(n_residuals) / dof;
  std::vector<double> inv_col(np);
  for (size_t c = 0; c < np; ++c) {
    std::vector<double> lhs = jtj;
    std::fill(inv_col.begin(), inv_col.end(), 0.0);
    inv_col[c] = 1.0;
    if (solve_inplace(lhs, inv_col, np))
      for (size_t rrow = 0; rrow < np; ++rrow)
        out.covariance[rrow * np + c] = inv_col[rrow] * var;
  }
  return out;
}

}  // namespace nvhet
