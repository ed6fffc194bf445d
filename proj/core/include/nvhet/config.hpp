#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nvhet/constants.hpp"
#include "nvhet/dynamics.hpp"
#include "nvhet/params.hpp"
#include "nvhet/synthesis.hpp"

namespace nvhet {

struct run_settings {
  uint64_t seed = 1;
  bool noiseless = false;  // turn every noise source off for this run
  // when > 0, laser_noise_fraction is recalibrated so the scenario's beat-peak
  // sensitivity lands on this value
  double calibrate_sensitivity_t_per_rthz = 0.0;
};

struct simulation_config {
  ensemble_params params;
  physical_constants constants;
  drive_scenario scenario;
  detector_model detector;
  run_settings run;
  void validate() const;
};

// strict parse: every key must be known, every value well typed; sections and
// fields fall back to defaults when absent
simulation_config parse_config(const std::string& json_text);
simulation_config load_config(const std::filesystem::path& path);

// full round-trippable serialization in a fixed key order with shortest
// round-trip number formatting; equal configs produce identical bytes
std::string canonical_json(const simulation_config& config);

uint64_t fnv1a64(std::string_view bytes);
uint64_t config_fingerprint(const simulation_config& config);

// reproduction record for a finished run
struct run_manifest {
  std::string tool_version;
  std::string command;
  uint64_t seed = 0;
  uint64_t config_hash = 0;
  std::string config_json;  // canonical config text
  std::vector<std::pair<std::string, uint64_t>> outputs;  // path, fnv1a64 of bytes
};
void write_manifest(const run_manifest& manifest, const std::filesystem::path& path);
run_manifest read_manifest(const std::filesystem::path& path);

}  // namespace nvhet
