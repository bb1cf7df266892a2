#pragma once

#include <stdexcept>
#include <string>

namespace qmoment {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A domain value was built from arguments outside its invariants.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// A scenario/closure combination or moment order the engine does not handle.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf, collapsed variance, step-size underflow, wavefunction leakage.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qmoment
