#pragma once

#include <stdexcept>
#include <string>

namespace fracfpe {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Series, quadrature or ODE integration failed to reach the requested tolerance.
class AccuracyError : public Error {
 public:
  using Error::Error;
};

// Result would overflow double precision.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Linear solve or similar numerical breakdown.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Evaluation hit a pole of a constructed solution; `location` is the
// coordinate (velocity or time) at which the denominator vanished.
class PoleError : public Error {
 public:
  PoleError(const std::string& what, double location)
      : Error(what), location_(location) {}
  double location() const noexcept { return location_; }

 private:
  double location_;
};

// Invalid run configuration (unknown keys, missing fields, invariants).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fracfpe
