#pragma once

#include <stdexcept>
#include <string>

namespace ttvos {

// Error categories. The CLI maps each one to its own exit code, so new
// failure modes should reuse one of these rather than throw std::runtime_error.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept = 0;
};

/// Tensor extents that do not line up (names the offending axis).
class DimensionError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "dimension"; }
};

/// A layer or run configuration that cannot be realized (e.g. a
/// non-integer output extent, indivisible channel groups).
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "config"; }
};

/// Bad data handed in by a caller: non-binary masks, mismatched frames.
class InputError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "input"; }
};

/// API misuse: backward on a non-scalar, replaying a consumed tape, ...
class UsageError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "usage"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "io"; }
};

/// Raised when a numeric invariant breaks at runtime (NaN loss, ...).
class NumericError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "numeric"; }
};

}  // namespace ttvos
