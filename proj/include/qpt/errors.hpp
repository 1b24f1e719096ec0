#pragma once

#include <stdexcept>
#include <string>

namespace qpt {

inline constexpr const char* kVersion = "0.1.0";

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or plan violates a documented invariant.
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

/// A closed-form expression was evaluated outside its real domain.
class InvalidDomain : public Error {
 public:
  using Error::Error;
};

/// Slow-time scaling tau = eps*Delta*Omega*t collapses (Delta or eps is zero);
/// the full equations must be used instead.
class DegenerateSlowTime : public Error {
 public:
  using Error::Error;
};

/// Continued-fraction expansion became numerically unreliable before the
/// requested number of terms.
class PrecisionExhausted : public Error {
 public:
  using Error::Error;
};

/// A state component became NaN/Inf where no trajectory carrier is available.
class NonFiniteState : public Error {
 public:
  using Error::Error;
};

/// Classification was asked for a trajectory with no integrated steps.
class EmptyTrajectory : public Error {
 public:
  using Error::Error;
};

/// Two grids with incompatible axes were compared.
class SpecMismatch : public Error {
 public:
  using Error::Error;
};

/// A configuration document or CLI argument failed to parse; the message
/// carries the offending field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) {
    throw InvalidSpec(what);
  }
}

}  // namespace detail

}  // namespace qpt
