#pragma once

#include <cmath>
#include <cstdint>

#include "nvhet/constants.hpp"

namespace nvhet {

namespace detail {
inline uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}
}  // namespace detail

// counter-keyed xoshiro256++: the state is a pure function of (seed, stream, block),
// so chunks can be generated in any order with identical results
class block_rng {
 public:
  block_rng(uint64_t seed, uint64_t stream, uint64_t block) {
    uint64_t key = detail::mix64(seed + 0x9e3779b97f4a7c15ULL);
    key = detail::mix64(key ^ (stream + 0xbf58476d1ce4e5b9ULL));
    key = detail::mix64(key ^ (block + 0x94d049bb133111ebULL));
    uint64_t sm = key;
    bool any = false;
    for (auto& s : s_) {
      sm += 0x9e3779b97f4a7c15ULL;
      s = detail::mix64(sm);
      any |= s != 0;
    }
    if (!any) s_[0] = 1;
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in (0, 1]; never 0, so logs are safe
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
  }

  // standard normal via Box-Muller, second draw cached
  double gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double a = 2.0 * kPi * uniform();
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// noise-stream ids used by the synthesizer
inline constexpr uint64_t kStreamShot = 1;
inline constexpr uint64_t kStreamLaser = 2;
inline constexpr uint64_t kStreamElectronic = 3;

}  // namespace nvhet
