#pragma once

// Shared shape/error vocabulary for the hpmixer library.

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hpmixer {

/// Runtime tensor shape. Rank 0 (empty shape) denotes a scalar.
using Shape = std::vector<std::size_t>;

/// Thrown when tensor shapes are incompatible with an operation.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a configuration value is invalid; the message names the field.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown on malformed input files (CSV, checkpoints, JSON configs).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown on API misuse (e.g. backward() without an active tape).
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Thrown when optimization diverges; carries step diagnostics in the message.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

/// Positive modulo for signed offsets (result in [0, m)).
inline std::size_t pos_mod(std::int64_t value, std::size_t m) {
  std::int64_t r = value % static_cast<std::int64_t>(m);
  if (r < 0) r += static_cast<std::int64_t>(m);
  return static_cast<std::size_t>(r);
}

}  // namespace hpmixer
