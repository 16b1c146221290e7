#pragma once

#include <stdexcept>
#include <string>

namespace sfgpi {

// Base for every error raised by the library. The harness maps the
// concrete kind onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or impossible environment parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's precondition (bad index, step after done, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed or non-finite data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Text or binary artifact could not be parsed.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Iterative solver hit its iteration cap.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Matrix does not have the rank an operation requires.
class RankError : public Error {
 public:
  using Error::Error;
};

// Enumerated state space would exceed the configured cap.
class SizeError : public Error {
 public:
  using Error::Error;
};

// A temporal-difference update produced a non-finite value.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace sfgpi
