#pragma once

#include <stdexcept>
#include <string>

namespace flydram {

/// Bad input: malformed config, out-of-range index, inconsistent spec.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The device or a persisted artifact is not in the state a procedure relies on
/// (failed verification read, corrupt blob, unprofilable column).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A region fails even at standard timing, so no latency can be profiled.
class ProfilingError : public IntegrityError {
 public:
  using IntegrityError::IntegrityError;
};

}  // namespace flydram
