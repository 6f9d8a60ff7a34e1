#pragma once
#include <stdexcept>
#include <string>

namespace netform {

// Error taxonomy maps onto CLI exit codes: validation -> 2, numerical -> 3,
// enumeration cap -> 4.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CapExceededError : std::runtime_error {
  explicit CapExceededError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitCapExceeded = 4;

}  // namespace netform
