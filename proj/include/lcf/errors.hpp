#pragma once

#include <stdexcept>
#include <string>

namespace lcf {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scenario/config file problems (CLI exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

/// Quadrature or iterative solver failed to converge (CLI exit code 3).
struct ConvergenceError : Error {
  using Error::Error;
};

/// A grid test function was queried outside its alias-safe band.
struct BandwidthError : Error {
  using Error::Error;
};

/// Quadrature cutoff below the declared bandwidth of an input.
struct CutoffError : Error {
  using Error::Error;
};

/// Matrix shape/space mismatch.
struct DimensionError : Error {
  using Error::Error;
};

/// Numerical contract violated (Hermiticity defect, PSD violation, ...).
struct NumericsError : Error {
  using Error::Error;
};

/// Test function failed the reality condition required for observables.
struct RealityError : Error {
  using Error::Error;
};

/// Bank does not span a requested function (ladder expansion residual).
struct SpanError : Error {
  using Error::Error;
};

}  // namespace lcf
