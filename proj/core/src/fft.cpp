#include "fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>

#include "nvhet/errors.hpp"

namespace nvhet::detail {

namespace {

std::mutex plan_mutex;  // FFTW's planner is not thread-safe; execution on distinct arrays is

struct plan_cache {
  std::map<size_t, fftw_plan> fwd, inv;
  ~plan_cache() {
    // leak plans at shutdown rather than racing other static destructors
  }
};

plan_cache& cache() {
  static plan_cache c;
  return c;
}

fftw_plan get_plan(size_t nfft, bool forward, double* re, fftw_complex* cx) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto& m = forward ? cache().fwd : cache().inv;
  auto it = m.find(nfft);
  if (it != m.end()) return it->second;
  // FFTW_UNALIGNED lets one plan serve any buffer of this length
  fftw_plan p = forward
                    ? fftw_plan_dft_r2c_1d(static_cast<int>(nfft), re, cx,
                                           FFTW_ESTIMATE | FFTW_UNALIGNED)
                    : fftw_plan_dft_c2r_1d(static_cast<int>(nfft), cx, re,
                                           FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!p) throw numeric_error("FFT planning failed for length " + std::to_string(nfft));
  m.emplace(nfft, p);
  return p;
}

}  // namespace

size_t next_fast_size(size_t n) {
  if (n == 0) return 1;
  for (size_t c = n;; ++c) {
    size_t r = c;
    while (r % 2 == 0) r /= 2;
    while (r % 3 == 0) r /= 3;
    while (r % 5 == 0) r /= 5;
    if (r == 1) return c;
  }
}

std::vector<std::complex<double>> rfft(const std::vector<double>& x, size_t nfft) {
  if (nfft < x.size()) throw config_error("rfft: nfft smaller than the input");
  if (nfft < 2) throw config_error("rfft: nfft must be >= 2");
  if (nfft > (size_t{1} << 28))
    throw numeric_error("rfft: transform length " + std::to_string(nfft) + " exceeds 2^28");
  std::vector<double> in(nfft, 0.0);
  std::memcpy(in.data(), x.data(), x.size() * sizeof(double));
  std::vector<std::complex<double>> out(nfft / 2 + 1);
  fftw_plan p = get_plan(nfft, true, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  fftw_execute_dft_r2c(p, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> irfft(const std::vector<std::complex<double>>& bins, size_t nfft) {
  if (bins.size() != nfft / 2 + 1) throw config_error("irfft: bin count does not match nfft");
  std::vector<std::complex<double>> in(bins);  // c2r destroys its input
  std::vector<double> out(nfft);
  fftw_plan p = get_plan(nfft, false, out.data(), reinterpret_cast<fftw_complex*>(in.data()));
  fftw_execute_dft_c2r(p, reinterpret_cast<fftw_complex*>(in.data()), out.data());
  const double scale = 1.0 / static_cast<double>(nfft);
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace nvhet::detail
