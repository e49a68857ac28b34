#pragma once

#include <stdexcept>
#include <string>

namespace sojd {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value is outside the operation's domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A configuration (SimConfig, experiment file, preset parameters) is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Too few observations for the requested operation.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Kernel density at the evaluation point is below the denominator floor.
class NoDataNearPointError : public Error {
 public:
  NoDataNearPointError(double x, const std::string& what)
      : Error(what), x_(x) {}
  double x() const noexcept { return x_; }

 private:
  double x_;
};

/// Quadrature, differentiation or another numeric routine failed to meet
/// its tolerance.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The Euler scheme produced a non-finite state.
class ExplosionError : public NumericError {
 public:
  ExplosionError(double time, const std::string& what)
      : NumericError(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Terms of a truncated generator expansion stopped decaying.
class ExpansionUnstableError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace sojd
