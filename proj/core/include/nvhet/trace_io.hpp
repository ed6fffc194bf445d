#pragma once

#include <filesystem>

#include "nvhet/trace.hpp"

namespace nvhet {

// csv: "time_s,volts" header, one row per sample, %.17g round-trip formatting
void write_trace_csv(const time_trace& trace, const std::filesystem::path& path);
time_trace read_trace_csv(const std::filesystem::path& path);

// binary: "NVTR" magic, u32 version, f32 sample rate, u32 length, then f64
// little-endian samples; seed and scenario hash land in a json .meta sidecar
// next to the data file. timestamp-free, so rewrites are byte identical
void write_trace_binary(const time_trace& trace, const std::filesystem::path& path);
time_trace read_trace_binary(const std::filesystem::path& path);

}  // namespace nvhet
