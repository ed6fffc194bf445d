#pragma once

#include <stdexcept>
#include <string>

namespace nvhet {

// invalid configuration or parameter values; CLI maps this to exit code 2
struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// guard violations during computation (step too large, fit divergence, ...); exit code 3
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// unreadable/unwritable/corrupt files; exit code 4
struct io_error : std::runtime_error {
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nvhet
