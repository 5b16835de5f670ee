#pragma once

#include <stdexcept>
#include <string>

namespace sbc {

// Base for every failure raised by the toolkit. The CLI maps ConfigError to
// exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ScheduleError : public Error {
 public:
  using Error::Error;
};

// Integration produced a state that violates trace or positivity bounds.
class PhysicsError : public Error {
 public:
  using Error::Error;
};

// Truncated distribution lost more probability than allowed.
class TruncationError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

// Trace carries no information about the time constant (flat signal).
class DegenerateDataError : public FitError {
 public:
  using FitError::FitError;
};

class InvalidDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace sbc
