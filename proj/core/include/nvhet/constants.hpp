#pragma once

namespace nvhet {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// spin-system constants; defaults describe the NV- center ground-state triplet
struct physical_constants {
  double gamma_hz_per_t = 2.803e10;          // gyromagnetic ratio of the sensing spin
  double zero_field_splitting_hz = 2.87e9;   // resonance line center at zero bias field
  double hyperfine_splitting_hz = 2.16e6;    // host-nucleus splitting (14N), spaces the triplet

  void validate() const;
};

}  // namespace nvhet
