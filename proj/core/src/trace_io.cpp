#include "nvhet/trace_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "nvhet/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "trace binary format assumes a little-endian host");

namespace nvhet {

namespace {

constexpr char kMagic[4] = {'N', 'V', 'T', 'R'};
constexpr uint32_t kVersion = 1;

std::string hex64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::filesystem::path meta_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".meta";
  return p;
}

void check_trace(const time_trace& trace) {
  if (!(trace.sample_rate_hz > 0.0)) throw io_error("trace sample rate must be > 0");
  if (trace.volts.empty()) throw io_error("refusing to write an empty trace");
  if (trace.volts.size() > 0xffffffffull) throw io_error("trace too long for u32 length");
}

}  // namespace

void write_trace_csv(const time_trace& trace, const std::filesystem::path& path) {
  check_trace(trace);
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw io_error("cannot open " + path.string() + " for writing");
  std::fputs("time_s,volts\n", f);
  bool ok = true;
  for (size_t i = 0; i < trace.volts.size() && ok; ++i)
    ok = std::fprintf(f, "%.17g,%.17g\n", trace.time_at(i), trace.volts[i]) > 0;
  ok = std::fclose(f) == 0 && ok;
  if (!ok) throw io_error("short write to " + path.string());
}

time_trace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("time_s,volts", 0) != 0)
    throw io_error(path.string() + " is not a trace csv (missing header)");
  time_trace trace;
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double t = 0.0, v = 0.0;
    if (std::sscanf(line.c_str(), "%lf,%lf", &t, &v) != 2)
      throw io_error("malformed csv row in " + path.string() + ": " + line);
    times.push_back(t);
    trace.volts.push_back(v);
  }
  if (times.size() < 2) throw io_error(path.string() + " holds fewer than 2 samples");
  trace.t0_s = times.front();
  trace.sample_rate_hz = 1.0 / (times[1] - times[0]);
  if (!(trace.sample_rate_hz > 0.0) || !std::isfinite(trace.sample_rate_hz))
    throw io_error(path.string() + " has a non-increasing time axis");
  return trace;
}

void write_trace_binary(const time_trace& trace, const std::filesystem::path& path) {
  check_trace(trace);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    const uint32_t version = kVersion;
    const float rate = static_cast<float>(trace.sample_rate_hz);
    const uint32_t length = static_cast<uint32_t>(trace.volts.size());
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&rate), 4);
    out.write(reinterpret_cast<const char*>(&length), 4);
    out.write(reinterpret_cast<const char*>(trace.volts.data()),
              static_cast<std::streamsize>(trace.volts.size() * sizeof(double)));
    if (!out) throw io_error("short write to " + path.string());
  }
  nlohmann::ordered_json meta;
  meta["sample_rate_hz"] = trace.sample_rate_hz;
  meta["t0_s"] = trace.t0_s;
  meta["length"] = trace.volts.size();
  meta["seed"] = hex64(trace.seed);
  meta["scenario_hash"] = hex64(trace.scenario_hash);
  std::ofstream mout(meta_path(path), std::ios::binary | std::ios::trunc);
  if (!mout) throw io_error("cannot open " + meta_path(path).string() + " for writing");
  mout << meta.dump(2) << "\n";
  if (!mout) throw io_error("short write to " + meta_path(path).string());
}

time_trace read_trace_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  char magic[4];
  uint32_t version = 0, length = 0;
  float rate = 0.0f;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&rate), 4);
  in.read(reinterpret_cast<char*>(&length), 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw io_error(path.string() + " is not a trace binary (bad magic)");
  if (version != kVersion)
    throw io_error(path.string() + " has unsupported version " + std::to_string(version));
  if (!(rate > 0.0f)) throw io_error(path.string() + " has a nonpositive sample rate");
  time_trace trace;
  trace.sample_rate_hz = static_cast<double>(rate);
  trace.volts.resize(length);
  in.read(reinterpret_cast<char*>(trace.volts.data()),
          static_cast<std::streamsize>(length * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(length * sizeof(double)))
    throw io_error(path.string() + " is truncated");

  const auto mp = meta_path(path);
  std::ifstream min(mp, std::ios::binary);
  if (min) {
    std::ostringstream ss;
    ss << min.rdbuf();
    try {
      const auto meta = nlohmann::ordered_json::parse(ss.str());
      if (meta.contains("sample_rate_hz"))
        trace.sample_rate_hz = meta.at("sample_rate_hz").get<double>();
      if (meta.contains("t0_s")) trace.t0_s = meta.at("t0_s").get<double>();
      if (meta.contains("seed"))
        trace.seed = std::stoull(meta.at("seed").get<std::string>(), nullptr, 0);
      if (meta.contains("scenario_hash"))
        trace.scenario_hash =
            std::stoull(meta.at("scenario_hash").get<std::string>(), nullptr, 0);
    } catch (const std::exception& e) {
      throw io_error("corrupt sidecar " + mp.string() + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace nvhet
