#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uzawa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Raised by direct and incomplete factorizations; carries the failing pivot.
class FactorizationError : public Error {
 public:
  FactorizationError(const std::string& what, std::size_t pivot)
      : Error(what + " (pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// An iteration hit a nonpositive curvature or an underflowing denominator.
class BreakdownError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Dense diagnostics were asked for a problem above the configured cap.
class CapExceededError : public Error {
 public:
  using Error::Error;
};

}  // namespace uzawa
