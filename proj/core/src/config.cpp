#include "nvhet/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "nvhet/errors.hpp"
#include "nvhet/version.hpp"

namespace nvhet {

namespace {

using ordered_json = nlohmann::ordered_json;

void reject_unknown(const ordered_json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) {
        ok = true;
        break;
      }
    if (!ok) throw config_error("unknown key \"" + key + "\" in " + where);
  }
}

void get_double(const ordered_json& obj, const char* key, double& out,
                const std::string& where) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw config_error(where + "." + key + " must be a number");
  out = v.get<double>();
}

void get_bool(const ordered_json& obj, const char* key, bool& out,
              const std::string& where) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) throw config_error(where + "." + key + " must be a boolean");
  out = v.get<bool>();
}

void get_seed(const ordered_json& obj, const char* key, uint64_t& out,
              const std::string& where) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (v.is_number_unsigned()) {
    out = v.get<uint64_t>();
  } else if (v.is_string()) {
    try {
      out = std::stoull(v.get<std::string>(), nullptr, 0);
    } catch (const std::exception&) {
      throw config_error(where + "." + key + " is not a valid integer string");
    }
  } else {
    throw config_error(where + "." + key + " must be a nonnegative integer");
  }
}

ordered_json parse_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw config_error(std::string("config is not valid json: ") + e.what());
  }
  if (!j.is_object()) throw config_error("config root must be a json object");
  return j;
}

void parse_params(const ordered_json& j, ensemble_params& p) {
  reject_unknown(j, {"gamma1_hz", "gamma2_hz", "contrast", "n_emitters", "collection_k",
                     "pump_coeff_hz_per_w"},
                 "params");
  get_double(j, "gamma1_hz", p.gamma1_hz, "params");
  get_double(j, "gamma2_hz", p.gamma2_hz, "params");
  get_double(j, "contrast", p.contrast, "params");
  get_double(j, "n_emitters", p.n_emitters, "params");
  get_double(j, "collection_k", p.collection_k, "params");
  get_double(j, "pump_coeff_hz_per_w", p.pump_coeff_hz_per_w, "params");
}

void parse_constants(const ordered_json& j, physical_constants& c) {
  reject_unknown(j, {"gamma_hz_per_t", "zero_field_splitting_hz", "hyperfine_splitting_hz"},
                 "constants");
  get_double(j, "gamma_hz_per_t", c.gamma_hz_per_t, "constants");
  get_double(j, "zero_field_splitting_hz", c.zero_field_splitting_hz, "constants");
  get_double(j, "hyperfine_splitting_hz", c.hyperfine_splitting_hz, "constants");
}

void parse_scenario(const ordered_json& j, drive_scenario& s) {
  reject_unknown(j, {"tones", "laser_power_w", "duration_s", "initial_p0", "line_center_hz",
                     "simplified_envelope", "gates"},
                 "scenario");
  if (j.contains("tones")) {
    const auto& arr = j.at("tones");
    if (!arr.is_array()) throw config_error("scenario.tones must be an array");
    s.tones.clear();
    for (const auto& t : arr) {
      if (!t.is_object()) throw config_error("scenario.tones entries must be objects");
      reject_unknown(t, {"amplitude_tesla", "frequency_hz", "phase_rad"}, "scenario.tones");
      if (!t.contains("amplitude_tesla") || !t.contains("frequency_hz"))
        throw config_error("each tone needs amplitude_tesla and frequency_hz");
      microwave_tone tone;
      get_double(t, "amplitude_tesla", tone.amplitude_tesla, "scenario.tones");
      get_double(t, "frequency_hz", tone.frequency_hz, "scenario.tones");
      get_double(t, "phase_rad", tone.phase_rad, "scenario.tones");
      s.tones.push_back(tone);
    }
  }
  get_double(j, "laser_power_w", s.laser_power_w, "scenario");
  get_double(j, "duration_s", s.duration_s, "scenario");
  get_double(j, "initial_p0", s.initial_p0, "scenario");
  get_double(j, "line_center_hz", s.line_center_hz, "scenario");
  get_bool(j, "simplified_envelope", s.simplified_envelope, "scenario");
  if (j.contains("gates")) {
    const auto& arr = j.at("gates");
    if (!arr.is_array()) throw config_error("scenario.gates must be an array");
    s.gates.clear();
    for (const auto& g : arr) {
      if (!g.is_object()) throw config_error("scenario.gates entries must be objects");
      reject_unknown(g, {"on_s", "off_s"}, "scenario.gates");
      if (!g.contains("on_s") || !g.contains("off_s"))
        throw config_error("each gate needs on_s and off_s");
      gate_window w;
      get_double(g, "on_s", w.on_s, "scenario.gates");
      get_double(g, "off_s", w.off_s, "scenario.gates");
      s.gates.push_back(w);
    }
  }
}

void parse_detector(const ordered_json& j, detector_model& d) {
  reject_unknown(j, {"volts_per_photon_rate", "electronic_noise_v_rthz",
                     "laser_noise_fraction", "laser_noise_corner_hz",
                     "laser_noise_exponent", "sample_rate_hz"},
                 "detector");
  get_double(j, "volts_per_photon_rate", d.volts_per_photon_rate, "detector");
  get_double(j, "electronic_noise_v_rthz", d.electronic_noise_v_rthz, "detector");
  get_double(j, "laser_noise_fraction", d.laser_noise_fraction, "detector");
  get_double(j, "laser_noise_corner_hz", d.laser_noise_corner_hz, "detector");
  get_double(j, "laser_noise_exponent", d.laser_noise_exponent, "detector");
  get_double(j, "sample_rate_hz", d.sample_rate_hz, "detector");
}

void parse_run(const ordered_json& j, run_settings& r) {
  reject_unknown(j, {"seed", "noiseless", "calibrate_sensitivity_t_per_rthz"}, "run");
  get_seed(j, "seed", r.seed, "run");
  get_bool(j, "noiseless", r.noiseless, "run");
  get_double(j, "calibrate_sensitivity_t_per_rthz", r.calibrate_sensitivity_t_per_rthz,
             "run");
}

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + tmp + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw io_error("cannot rename " + tmp + ": " + ec.message());
}

std::string hex64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t parse_hex64(const ordered_json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<uint64_t>();
  if (v.is_string()) {
    try {
      return std::stoull(v.get<std::string>(), nullptr, 0);
    } catch (const std::exception&) {
    }
  }
  throw config_error(where + " must be an integer or hex string");
}

}  // namespace

void simulation_config::validate() const {
  params.validate();
  constants.validate();
  scenario.validate(params, constants);
  detector.validate();
  if (run.calibrate_sensitivity_t_per_rthz < 0.0 ||
      !std::isfinite(run.calibrate_sensitivity_t_per_rthz))
    throw config_error("run.calibrate_sensitivity_t_per_rthz must be >= 0");
}

simulation_config parse_config(const std::string& json_text) {
  const ordered_json j = parse_text(json_text);
  reject_unknown(j, {"params", "constants", "scenario", "detector", "run"}, "config");
  simulation_config cfg;
  auto section = [&](const char* name) -> const ordered_json* {
    if (!j.contains(name)) return nullptr;
    const auto& s = j.at(name);
    if (!s.is_object())
      throw config_error(std::string("config.") + name + " must be an object");
    return &s;
  };
  if (const auto* s = section("params")) parse_params(*s, cfg.params);
  if (const auto* s = section("constants")) parse_constants(*s, cfg.constants);
  if (const auto* s = section("scenario")) parse_scenario(*s, cfg.scenario);
  if (const auto* s = section("detector")) parse_detector(*s, cfg.detector);
  if (const auto* s = section("run")) parse_run(*s, cfg.run);
  return cfg;
}

simulation_config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_json(const simulation_config& config) {
  ordered_json j;
  j["params"] = {{"gamma1_hz", config.params.gamma1_hz},
                 {"gamma2_hz", config.params.gamma2_hz},
                 {"contrast", config.params.contrast},
                 {"n_emitters", config.params.n_emitters},
                 {"collection_k", config.params.collection_k},
                 {"pump_coeff_hz_per_w", config.params.pump_coeff_hz_per_w}};
  j["constants"] = {
      {"gamma_hz_per_t", config.constants.gamma_hz_per_t},
      {"zero_field_splitting_hz", config.constants.zero_field_splitting_hz},
      {"hyperfine_splitting_hz", config.constants.hyperfine_splitting_hz}};
  ordered_json tones = ordered_json::array();
  for (const auto& t : config.scenario.tones)
    tones.push_back({{"amplitude_tesla", t.amplitude_tesla},
                     {"frequency_hz", t.frequency_hz},
                     {"phase_rad", t.phase_rad}});
  ordered_json gates = ordered_json::array();
  for (const auto& g : config.scenario.gates)
    gates.push_back({{"on_s", g.on_s}, {"off_s", g.off_s}});
  j["scenario"] = {{"tones", std::move(tones)},
                   {"laser_power_w", config.scenario.laser_power_w},
                   {"duration_s", config.scenario.duration_s},
                   {"initial_p0", config.scenario.initial_p0},
                   {"line_center_hz", config.scenario.line_center_hz},
                   {"simplified_envelope", config.scenario.simplified_envelope},
                   {"gates", std::move(gates)}};
  j["detector"] = {{"volts_per_photon_rate", config.detector.volts_per_photon_rate},
                   {"electronic_noise_v_rthz", config.detector.electronic_noise_v_rthz},
                   {"laser_noise_fraction", config.detector.laser_noise_fraction},
                   {"laser_noise_corner_hz", config.detector.laser_noise_corner_hz},
                   {"laser_noise_exponent", config.detector.laser_noise_exponent},
                   {"sample_rate_hz", config.detector.sample_rate_hz}};
  j["run"] = {{"seed", config.run.seed},
              {"noiseless", config.run.noiseless},
              {"calibrate_sensitivity_t_per_rthz",
               config.run.calibrate_sensitivity_t_per_rthz}};
  return j.dump();
}

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

uint64_t config_fingerprint(const simulation_config& config) {
  return fnv1a64(canonical_json(config));
}

void write_manifest(const run_manifest& manifest, const std::filesystem::path& path) {
  ordered_json j;
  j["tool_version"] = manifest.tool_version.empty() ? kVersion : manifest.tool_version;
  j["command"] = manifest.command;
  j["seed"] = manifest.seed;
  j["config_hash"] = hex64(manifest.config_hash);
  try {
    j["config"] = ordered_json::parse(manifest.config_json);
  } catch (const std::exception& e) {
    throw config_error(std::string("manifest config_json is not valid json: ") + e.what());
  }
  ordered_json outs = ordered_json::array();
  for (const auto& [p, h] : manifest.outputs)
    outs.push_back({{"path", p}, {"fnv1a64", hex64(h)}});
  j["outputs"] = std::move(outs);
  atomic_write(path, j.dump(2) + "\n");
}

run_manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const ordered_json j = parse_text(ss.str());
  reject_unknown(j, {"tool_version", "command", "seed", "config_hash", "config", "outputs"},
                 "manifest");
  run_manifest m;
  for (const char* req : {"tool_version", "command", "seed", "config_hash", "config"})
    if (!j.contains(req))
      throw config_error(std::string("manifest is missing \"") + req + "\"");
  m.tool_version = j.at("tool_version").get<std::string>();
  m.command = j.at("command").get<std::string>();
  m.seed = parse_hex64(j.at("seed"), "manifest.seed");
  m.config_hash = parse_hex64(j.at("config_hash"), "manifest.config_hash");
  m.config_json = j.at("config").dump();
  if (j.contains("outputs")) {
    for (const auto& o : j.at("outputs")) {
      reject_unknown(o, {"path", "fnv1a64"}, "manifest.outputs");
      m.outputs.emplace_back(o.at("path").get<std::string>(),
                             parse_hex64(o.at("fnv1a64"), "manifest.outputs.fnv1a64"));
    }
  }
  return m;
}

}  // namespace nvhet
