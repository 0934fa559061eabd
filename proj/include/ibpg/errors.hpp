#pragma once

#include <stdexcept>
#include <string>

namespace ibpg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point violates the domain contract of a kernel or problem.
class DomainError : public Error {
 public:
  enum class Kind { not_in_domain, not_interior, not_finite, shape_mismatch };

  DomainError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Invalid user-supplied parameters (schedules, budgets, config files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A θ-schedule produced a value violating its admissibility conditions.
class ScheduleError : public Error {
 public:
  using Error::Error;
};

/// An oracle returned a pair outside the requested tolerances.
class CertificateError : public Error {
 public:
  using Error::Error;
};

/// The inner solver ran out of its iteration allowance before the tolerance
/// was met. Solvers catch this and stop the run cleanly.
class OracleBudgetExceeded : public Error {
 public:
  OracleBudgetExceeded(const std::string& what, unsigned long long used)
      : Error(what), used_(used) {}
  unsigned long long used() const noexcept { return used_; }

 private:
  unsigned long long used_;
};

/// Malformed or unreadable problem instance.
class InstanceError : public Error {
 public:
  using Error::Error;
};

/// Floating point breakdown (NaN, failed factorization, iteration caps).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ibpg
