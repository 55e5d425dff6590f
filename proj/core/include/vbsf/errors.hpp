#pragma once

#include <stdexcept>
#include <string>

namespace vbsf {

// Base class for everything thrown by this library.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration, contract violation, or malformed input data.
struct config_error : error {
  using error::error;
};

// Numerical failure (non-positive-definite system, diverged estimate, ...).
struct numerical_error : error {
  using error::error;
};

}  // namespace vbsf
