#pragma once

#include <stdexcept>
#include <string>

namespace dynvoi {

// Base of every error raised by the library. Callers that only care about
// "numerical vs. input" can catch ConfigError / NumericalError.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept = 0;
};

// Bad input: wrong dimensions, out-of-domain parameters, unparsable config.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "ConfigError"; }
};

// A scalar argument outside the domain of a closed-form expression.
class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
  const char* kind() const noexcept override { return "DomainError"; }
};

// Failures of an otherwise valid computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Innovation covariance G S G' + H H' is singular (or condition > 1e14).
class SingularInnovation : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "SingularInnovation"; }
};

class NoConvergence : public NumericalError {
 public:
  NoConvergence(const std::string& what, double last_residual)
      : NumericalError(what), residual_(last_residual) {}
  const char* kind() const noexcept override { return "NoConvergence"; }
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// A finite-difference stencil or next state left the value-function grid.
class GridEscape : public NumericalError {
 public:
  using NumericalError::NumericalError;
  const char* kind() const noexcept override { return "GridEscape"; }
};

}  // namespace dynvoi
