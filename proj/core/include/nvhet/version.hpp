#pragma once

namespace nvhet {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nvhet
