#pragma once

#include "nvhet/constants.hpp"

namespace nvhet {

// ensemble + readout parameters; defaults are the reference bench values
struct ensemble_params {
  double gamma1_hz = 102.0;            // longitudinal relaxation rate
  double gamma2_hz = 241e3;            // dephasing rate, half the resonance FWHM
  double contrast = 0.05;              // relative fluorescence dip of the pumped-out state
  double n_emitters = 2.8e13;          // defects contributing to the detected signal
  double collection_k = 0.25;          // detected photons per repolarization event
  double pump_coeff_hz_per_w = 250.0;  // optical repolarization rate per watt of pump light

  void validate() const;
};

// dephasing rate candidates: the resonance-linewidth value, and two values obtained by
// fitting the microwave response curve (turnover position is readout-chain sensitive)
inline constexpr double kGamma2LinewidthHz = 241e3;
inline constexpr double kGamma2ResponseFitHz = 152e3;
inline constexpr double kGamma2ResponseFitAltHz = 144e3;

// pump power at which the default pump coefficient gives gamma_p = 204 Hz
inline constexpr double kBenchLaserPowerW = 0.816;

// one continuous microwave field; amplitudes are magnetic (tesla at the ensemble)
struct microwave_tone {
  double amplitude_tesla = 0.0;
  double frequency_hz = 0.0;   // absolute drive frequency
  double phase_rad = 0.0;

  void validate() const;
};

}  // namespace nvhet
