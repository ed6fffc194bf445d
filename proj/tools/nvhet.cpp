// command-line front end: simulate traces, analyze them, run parameter sweeps,
// and print analytic sensitivity reports. exit codes: 0 ok, 2 config, 3 numeric,
// 4 i/o.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nvhet/analysis.hpp"
#include "nvhet/config.hpp"
#include "nvhet/errors.hpp"
#include "nvhet/physics.hpp"
#include "nvhet/rng.hpp"
#include "nvhet/sensing.hpp"
#include "nvhet/synthesis.hpp"
#include "nvhet/trace_io.hpp"
#include "nvhet/version.hpp"

namespace fs = std::filesystem;
using namespace nvhet;

namespace {

// --config accepts a literal path, then a preset name resolved against
// $NVHET_PRESET_DIR, then ./presets
fs::path resolve_config(const std::string& name) {
  if (fs::exists(name)) return name;
  std::vector<fs::path> roots;
  if (const char* env = std::getenv("NVHET_PRESET_DIR")) roots.emplace_back(env);
  roots.emplace_back("presets");
  for (const auto& root : roots)
    for (const auto& candidate : {root / name, root / (name + ".json")})
      if (fs::exists(candidate)) return candidate;
  throw io_error("config not found: " + name);
}

noise_toggles toggles_for(const run_settings& run) {
  noise_toggles t;
  if (run.noiseless) t.shot = t.laser = t.electronic = false;
  return t;
}

// resolve the run: optional seed override, optional laser-noise calibration
simulation_config prepare(simulation_config cfg, std::optional<uint64_t> seed_override) {
  if (seed_override) cfg.run.seed = *seed_override;
  cfg.validate();
  if (!cfg.run.noiseless && cfg.run.calibrate_sensitivity_t_per_rthz > 0.0)
    cfg.detector.laser_noise_fraction =
        calibrate_noise(cfg.detector, cfg.scenario, cfg.params, cfg.constants,
                        cfg.run.calibrate_sensitivity_t_per_rthz);
  return cfg;
}

uint64_t file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read back " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64(ss.str());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw io_error("short write to " + path.string());
}

void write_spectrum_csv(const spectrum& spec, const fs::path& path) {
  std::ostringstream ss;
  ss << "freq_hz,amplitude_v\n";
  char line[80];
  for (size_t k = 0; k < spec.frequency_hz.size(); ++k) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", spec.frequency_hz[k],
                  spec.amplitude[k]);
    ss << line;
  }
  write_text(path, ss.str());
}

time_trace load_trace(const fs::path& path) {
  if (path.extension() == ".nvtr") return read_trace_binary(path);
  return read_trace_csv(path);
}

// drop an initial settle segment so startup transients stay out of spectra
time_trace trim_trace(time_trace trace, double settle_s) {
  const auto skip = static_cast<size_t>(settle_s * trace.sample_rate_hz);
  if (skip == 0) return trace;
  if (skip >= trace.volts.size()) throw config_error("trim longer than the trace");
  trace.volts.erase(trace.volts.begin(), trace.volts.begin() + static_cast<long>(skip));
  trace.t0_s += static_cast<double>(skip) / trace.sample_rate_hz;
  return trace;
}

double beat_of(const drive_scenario& scenario) {
  if (scenario.tones.size() < 2) return 0.0;
  return beat_cycle_hz(
      std::abs(scenario.tones[1].frequency_hz - scenario.tones[0].frequency_hz));
}

struct colon_pair {
  double a = 0.0;
  double b = 0.0;
};
colon_pair parse_pair(const std::string& text, const char* what) {
  colon_pair p;
  char extra;
  if (std::sscanf(text.c_str(), "%lf:%lf%c", &p.a, &p.b, &extra) != 2)
    throw config_error(std::string(what) + " must be LO:HI, got \"" + text + "\"");
  return p;
}

int cmd_simulate(const std::string& config_arg, const fs::path& out_dir,
                 std::optional<uint64_t> seed_override, const std::string& format,
                 const std::string& from_manifest) {
  simulation_config cfg;
  std::string fmt = format;
  run_manifest prior;
  const bool reproducing = !from_manifest.empty();
  if (reproducing) {
    prior = read_manifest(from_manifest);
    cfg = prepare(parse_config(prior.config_json), prior.seed);
    if (prior.command.find("--format=binary") != std::string::npos) fmt = "binary";
  } else {
    cfg = prepare(load_config(resolve_config(config_arg)), seed_override);
  }

  const auto trace = synthesize_trace(cfg.scenario, cfg.params, cfg.constants,
                                      cfg.detector, cfg.run.seed, toggles_for(cfg.run));
  fs::create_directories(out_dir);
  std::vector<fs::path> files;
  if (fmt == "binary") {
    write_trace_binary(trace, out_dir / "trace.nvtr");
    files = {out_dir / "trace.nvtr", out_dir / "trace.nvtr.meta"};
  } else {
    write_trace_csv(trace, out_dir / "trace.csv");
    files = {out_dir / "trace.csv"};
  }

  run_manifest m;
  m.tool_version = kVersion;
  m.command = "simulate --format=" + fmt;
  m.seed = cfg.run.seed;
  m.config_hash = config_fingerprint(cfg);
  m.config_json = canonical_json(cfg);
  for (const auto& f : files) m.outputs.emplace_back(f.filename().string(), file_hash(f));
  write_manifest(m, out_dir / "manifest.json");

  std::printf("trace_samples=%zu\n", trace.volts.size());
  std::printf("trace_seed=%llu\n", static_cast<unsigned long long>(trace.seed));
  for (const auto& [name, hash] : m.outputs)
    std::printf("output=%s fnv1a64=0x%016llx\n", name.c_str(),
                static_cast<unsigned long long>(hash));

  if (reproducing) {
    bool same = prior.outputs.size() == m.outputs.size();
    for (size_t i = 0; same && i < m.outputs.size(); ++i)
      same = prior.outputs[i].first == m.outputs[i].first &&
             prior.outputs[i].second == m.outputs[i].second;
    std::printf("reproduced=%s\n", same ? "yes" : "no");
    if (!same) throw numeric_error("re-run outputs differ from the manifest");
  }
  return 0;
}

int cmd_analyze(const std::string& trace_arg, const fs::path& out_dir,
                const std::string& window_name, int pad, double trim_s, double peak_f,
                double signal_span, double noise_span, double linewidth_f,
                const std::vector<std::string>& folds, const std::string& band_arg,
                double tolerance) {
  std::ostringstream report;
  fs::create_directories(out_dir);

  if (!trace_arg.empty()) {
    auto trace = trim_trace(load_trace(trace_arg), trim_s);
    const auto window = window_name == "hann" ? window_kind::hann : window_kind::rect;
    const auto spec = amplitude_spectrum(trace, window, pad);
    write_spectrum_csv(spec, out_dir / "spectrum.csv");
    report << "samples=" << trace.volts.size() << "\n";
    report << "duration_s=" << spec.duration_s << "\n";
    report << "window=" << spec.window << "\n";

    const double rbw = 1.0 / spec.duration_s;
    if (peak_f > 0.0) {
      const double sig_span = signal_span > 0.0 ? signal_span : 24.0 * rbw;
      const double noi_span =
          noise_span > 0.0 ? noise_span : std::min(240.0 * rbw, 1.6 * peak_f);
      const auto est = peak_snr(spec, peak_f, sig_span, noi_span);
      if (est.amplitude > 0.0) {
        char line[200];
        std::snprintf(line, sizeof line,
                      "peak_found=1\npeak_freq_hz=%.10g\npeak_amplitude_v=%.10g\n"
                      "peak_snr=%.10g\nnoise_rms_v=%.10g\n",
                      est.frequency_hz, est.amplitude, est.snr, est.noise_rms);
        report << line;
      } else {
        report << "peak_found=0\n";
      }
    }
    if (linewidth_f > 0.0) {
      const auto lw = beat_linewidth(trace, linewidth_f);
      char line[160];
      std::snprintf(line, sizeof line,
                    "fwhm_hz=%.10g\nline_center_hz=%.10g\nline_converged=%d\n",
                    lw.fwhm_hz, lw.center_hz, lw.converged ? 1 : 0);
      report << line;
    }
  }

  if (!folds.empty()) {
    if (band_arg.empty()) throw config_error("--fold requires --band LO:HI");
    const auto band = parse_pair(band_arg, "--band");
    std::vector<grid_measurement> meas;
    for (const auto& text : folds) {
      grid_measurement g;
      char extra;
      if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &g.spacing_hz, &g.offset_hz,
                      &g.beat_hz, &extra) != 3)
        throw config_error("--fold must be SPACING:OFFSET:BEAT, got \"" + text + "\"");
      meas.push_back(g);
    }
    const auto cands = disambiguate_frequency(meas, band.a, band.b, tolerance);
    report << "candidates=" << cands.size() << "\n";
    for (size_t i = 0; i < cands.size(); ++i) {
      char line[64];
      std::snprintf(line, sizeof line, "candidate_%zu_hz=%.10g\n", i, cands[i]);
      report << line;
    }
  }

  if (report.str().empty())
    throw config_error("nothing to do: pass --trace and/or --fold measurements");
  write_text(out_dir / "report.txt", report.str());
  std::fputs(report.str().c_str(), stdout);
  return 0;
}

struct sweep_row {
  double value = 0.0;
  uint64_t seed = 0;
  double beat_hz = 0.0;
  double amplitude_v = 0.0;
  double snr = 0.0;
  double noise_rms_v = 0.0;
  double fwhm_hz = 0.0;
};

int cmd_sweep(const std::string& config_arg, const fs::path& out_dir,
              const std::string& param, double from, double to, int points, bool log_scale,
              const std::string& metrics, int threads, std::optional<uint64_t> seed_override) {
  if (points < 2) throw config_error("--points must be >= 2");
  if (from == to) throw config_error("sweep range is degenerate");
  if (log_scale && (from <= 0.0 || to <= 0.0))
    throw config_error("--log needs positive endpoints");
  const bool want_fwhm = metrics.find("fwhm") != std::string::npos;
  const bool want_peak = metrics.find("peak") != std::string::npos;
  if (!want_peak && !want_fwhm)
    throw config_error("--metrics must name peak and/or fwhm");

  const auto base_cfg = prepare(load_config(resolve_config(config_arg)), seed_override);
  const uint64_t base_seed = base_cfg.run.seed;

  // dotted path into the canonical document, e.g. scenario.tones.1.amplitude_tesla
  std::string pointer = "/" + param;
  for (auto& c : pointer)
    if (c == '.') c = '/';
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(canonical_json(base_cfg));
    const auto& leaf = doc.at(nlohmann::ordered_json::json_pointer(pointer));
    if (!leaf.is_number())
      throw config_error("sweep parameter " + param + " is not numeric");
  } catch (const nlohmann::json::exception&) {
    throw config_error("unknown sweep parameter " + param);
  }

  std::vector<sweep_row> rows(static_cast<size_t>(points));
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mu;

  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= rows.size() || failed.load()) return;
      try {
        const double frac = static_cast<double>(i) / static_cast<double>(points - 1);
        const double value = log_scale
                                 ? from * std::pow(to / from, frac)
                                 : from + (to - from) * frac;
        auto point_doc = doc;
        point_doc[nlohmann::ordered_json::json_pointer(pointer)] = value;
        auto cfg = parse_config(point_doc.dump());
        cfg.run.seed = detail::mix64(base_seed + i + 1);
        cfg.validate();

        sweep_row row;
        row.value = value;
        row.seed = cfg.run.seed;
        row.beat_hz = beat_of(cfg.scenario);
        auto trace = synthesize_trace(cfg.scenario, cfg.params, cfg.constants,
                                      cfg.detector, cfg.run.seed, toggles_for(cfg.run));
        if (cfg.scenario.gates.empty())
          trace = trim_trace(std::move(trace),
                             std::min(1.0, cfg.scenario.duration_s / 10.0));
        const double t_used = trace.duration_s();
        if (want_peak && row.beat_hz > 20.0 / t_used) {
          const auto spec = amplitude_spectrum(trace, window_kind::hann, 4);
          const double rbw = 1.0 / t_used;
          const auto est = peak_snr(spec, row.beat_hz, 24.0 * rbw,
                                    std::min(240.0 * rbw, 1.6 * row.beat_hz));
          row.amplitude_v = est.amplitude;
          row.snr = est.snr;
          row.noise_rms_v = est.noise_rms;
        }
        if (want_fwhm && row.beat_hz > 0.0)
          row.fwhm_hz = beat_linewidth(trace, row.beat_hz).fwhm_hz;
        rows[i] = row;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };

  const int n_threads =
      std::max(1, std::min<int>(threads, static_cast<int>(rows.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failed.load()) throw numeric_error("sweep point failed: " + first_error);

  fs::create_directories(out_dir);
  std::ostringstream csv;
  csv << "point,value,seed,beat_cycle_hz,amplitude_v,snr,noise_rms_v";
  if (want_fwhm) csv << ",fwhm_hz";
  csv << "\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    char line[240];
    std::snprintf(line, sizeof line, "%zu,%.12g,%llu,%.12g,%.12g,%.12g,%.12g", i,
                  rows[i].value, static_cast<unsigned long long>(rows[i].seed),
                  rows[i].beat_hz, rows[i].amplitude_v, rows[i].snr,
                  rows[i].noise_rms_v);
    csv << line;
    if (want_fwhm) {
      std::snprintf(line, sizeof line, ",%.12g", rows[i].fwhm_hz);
      csv << line;
    }
    csv << "\n";
  }
  write_text(out_dir / "sweep.csv", csv.str());

  run_manifest m;
  m.tool_version = kVersion;
  {
    char cmd[256];
    std::snprintf(cmd, sizeof cmd,
                  "sweep --param=%s --from=%.12g --to=%.12g --points=%d%s --metrics=%s",
                  param.c_str(), from, to, points, log_scale ? " --log" : "",
                  metrics.c_str());
    m.command = cmd;
  }
  m.seed = base_seed;
  m.config_hash = config_fingerprint(base_cfg);
  m.config_json = canonical_json(base_cfg);
  m.outputs.emplace_back("sweep.csv", file_hash(out_dir / "sweep.csv"));
  write_manifest(m, out_dir / "manifest.json");

  std::printf("points=%d\n", points);
  std::printf("output=sweep.csv fnv1a64=0x%016llx\n",
              static_cast<unsigned long long>(m.outputs[0].second));
  return 0;
}

int cmd_report(const std::string& config_arg, double power_w, double reference_b,
               double delta, int channels, double signal_b, double t_s,
               const std::string& band_arg, int max_channels) {
  ensemble_params params;
  physical_constants consts;
  if (!config_arg.empty()) {
    const auto cfg = load_config(resolve_config(config_arg));
    params = cfg.params;
    consts = cfg.constants;
  }
  params.validate();
  consts.validate();

  operating_point op;
  op.laser_power_w = power_w;
  op.reference_b_tesla = reference_b;
  op.delta_hz = delta;
  op.channels = channels;
  op.validate(params, consts);

  const double gamma_p = pump_rate(power_w, params);
  const double g_ref = drive_rate(reference_b, consts);
  const double gamma_ref = induced_relaxation(g_ref, params.gamma2_hz);
  const double sum_rate = gamma_p + params.gamma1_hz + channels * gamma_ref;
  const double bw = bandwidth_3db(gamma_p, params.gamma1_hz, channels * gamma_ref);
  const double snr =
      multichannel_snr(params, consts, op, channels, signal_b, t_s);
  const double limit = snr_saturation_limit(params, consts, signal_b, t_s, channels);
  const double floor = shot_noise_sensitivity(params, consts);

  auto line = [](const char* key, double v) { std::printf("%s=%.10g\n", key, v); };
  line("gamma_p_hz", gamma_p);
  line("gamma_ref_per_channel_hz", gamma_ref);
  line("sum_rate_hz", sum_rate);
  line("equilibrium_population",
       equilibrium_population(gamma_p, params.gamma1_hz, channels * gamma_ref));
  line("bandwidth_hz", bw);
  line("bandwidth_cycle_hz", beat_cycle_hz(bw));
  line("beat_cycle_hz", beat_cycle_hz(delta));
  line("snr", snr);
  line("snr_saturation_limit", limit);
  line("saturation_gap", snr > 0.0 ? limit / snr : 0.0);
  line("min_field_tesla", snr > 0.0 ? signal_b / snr : 0.0);
  line("shot_noise_sensitivity_t_rthz", floor);

  if (!band_arg.empty()) {
    const auto band = parse_pair(band_arg, "--band");
    const auto plan =
        plan_reference_grid(band.a, band.b, params, consts, op, max_channels);
    line("grid_spacing_hz", plan.spacing_hz);
    std::printf("grid_channels=%d\n", plan.channels);
    line("grid_snr_penalty", plan.snr_penalty);
    std::printf("grid_coverage_warning=%d\n", plan.coverage_warning ? 1 : 0);
    std::printf("grid_weak_drive_ok=%d\n", plan.weak_drive_ok ? 1 : 0);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diamond microwave magnetometer simulator"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_arg, format = "csv", from_manifest;
  std::string out_dir = ".";
  uint64_t seed_value = 0;

  auto* sim = app.add_subcommand("simulate", "synthesize a detector trace");
  sim->add_option("--config", config_arg, "config file or preset name");
  sim->add_option("--out", out_dir, "output directory");
  auto* sim_seed = sim->add_option("--seed", seed_value, "override the config seed");
  sim->add_option("--format", format, "trace format")
      ->check(CLI::IsMember({"csv", "binary"}));
  sim->add_option("--from-manifest", from_manifest,
                  "re-run a recorded run and verify output hashes");

  std::string trace_arg, window_name = "rect", band_arg;
  int pad = 1;
  double trim_s = 0.0, peak_f = 0.0, signal_span = 0.0, noise_span = 0.0;
  double linewidth_f = 0.0, tolerance = 1e-3;
  std::vector<std::string> folds;
  auto* ana = app.add_subcommand("analyze", "spectrum, peaks, linewidth, grid folds");
  ana->add_option("--trace", trace_arg, "trace file (.csv or .nvtr)");
  ana->add_option("--out", out_dir, "output directory");
  ana->add_option("--window", window_name, "spectrum window")
      ->check(CLI::IsMember({"rect", "hann"}));
  ana->add_option("--pad", pad, "zero-pad factor")->check(CLI::Range(1, 64));
  ana->add_option("--trim", trim_s, "discard this many leading seconds");
  ana->add_option("--peak", peak_f, "report the peak nearest this frequency (Hz)");
  ana->add_option("--signal-span", signal_span, "peak exclusion width (Hz)");
  ana->add_option("--noise-span", noise_span, "noise annulus width (Hz)");
  ana->add_option("--linewidth", linewidth_f, "fit the line near this frequency (Hz)");
  ana->add_option("--fold", folds, "grid fold measurement SPACING:OFFSET:BEAT");
  ana->add_option("--band", band_arg, "disambiguation search band LO:HI");
  ana->add_option("--tolerance", tolerance, "fold match tolerance (Hz)");

  std::string param, metrics = "peak";
  double from = 0.0, to = 0.0;
  int points = 0, threads = static_cast<int>(std::thread::hardware_concurrency());
  bool log_scale = false;
  auto* swp = app.add_subcommand("sweep", "simulate and analyze across a parameter");
  swp->add_option("--config", config_arg, "config file or preset name")->required();
  swp->add_option("--param", param, "dotted config path, e.g. scenario.duration_s")
      ->required();
  swp->add_option("--from", from, "first value")->required();
  swp->add_option("--to", to, "last value")->required();
  swp->add_option("--points", points, "number of points")->required();
  swp->add_flag("--log", log_scale, "logarithmic spacing");
  swp->add_option("--metrics", metrics, "comma list of peak,fwhm");
  swp->add_option("--threads", threads, "worker threads");
  auto* swp_seed = swp->add_option("--seed", seed_value, "override the config seed");
  swp->add_option("--out", out_dir, "output directory");

  double power_w = kBenchLaserPowerW, reference_b = 2.2e-7, delta = 480.0;
  double signal_b = 3.66e-8, t_s = 1.0;
  int channels = 1, max_channels = 64;
  auto* rep = app.add_subcommand("report", "analytic sensitivity figures");
  rep->add_option("--config", config_arg, "take ensemble parameters from this config");
  rep->add_option("--power", power_w, "laser power (W)");
  rep->add_option("--reference-b", reference_b, "reference field (T)");
  rep->add_option("--delta", delta, "beat rate (s^-1)");
  rep->add_option("--channels", channels, "reference channel count");
  rep->add_option("--signal-b", signal_b, "signal field for snr figures (T)");
  rep->add_option("--time", t_s, "integration time (s)");
  rep->add_option("--band", band_arg, "plan a reference grid over LO:HI");
  rep->add_option("--max-channels", max_channels, "grid channel budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(config_arg, out_dir,
                          *sim_seed ? std::optional<uint64_t>(seed_value) : std::nullopt,
                          format, from_manifest);
    if (ana->parsed())
      return cmd_analyze(trace_arg, out_dir, window_name, pad, trim_s, peak_f,
                         signal_span, noise_span, linewidth_f, folds, band_arg,
                         tolerance);
    if (swp->parsed())
      return cmd_sweep(config_arg, out_dir, param, from, to, points, log_scale, metrics,
                       threads,
                       *swp_seed ? std::optional<uint64_t>(seed_value) : std::nullopt);
    if (rep->parsed())
      return cmd_report(config_arg, power_w, reference_b, delta, channels, signal_b, t_s,
                        band_arg, max_channels);
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const io_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
