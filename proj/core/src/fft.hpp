#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace nvhet::detail {

// smallest 2^a * 3^b * 5^c >= n (good FFT sizes)
size_t next_fast_size(size_t n);

// forward real-to-complex DFT of x zero-padded to nfft; returns nfft/2 + 1 bins.
// plans are cached per length; safe to call from multiple threads
std::vector<std::complex<double>> rfft(const std::vector<double>& x, size_t nfft);

// inverse of rfft, normalized so irfft(rfft(x, n), n) == x
std::vector<double> irfft(const std::vector<std::complex<double>>& bins, size_t nfft);

}  // namespace nvhet::detail
