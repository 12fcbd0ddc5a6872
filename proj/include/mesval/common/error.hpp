#pragma once

#include <stdexcept>
#include <string>

namespace mesval {

/// Base class for every error raised by the library. The message is always
/// prefixed with the module that raised it, e.g. "lp_core: ...".
class Error : public std::runtime_error {
 public:
  Error(const std::string& module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(module) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// Malformed input: bad dimensions, inconsistent specs, bad configuration.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Data files that fail validation (CSV schema, negative loads, gaps).
class DataError : public Error {
 public:
  using Error::Error;
};

/// An optimization problem that was required to be solvable was not.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown (tiny pivots, non-finite values).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The KKT system at an LP solution could not be inverted even after
/// damping. Callers should fall back to the dual (envelope) subgradient.
class DegenerateSolutionError : public Error {
 public:
  using Error::Error;
};

/// A finite-difference oracle could not be evaluated (a perturbed problem
/// was infeasible or unbounded).
class OracleInapplicable : public Error {
 public:
  using Error::Error;
};

/// A search or iteration budget was exhausted.
class LimitExceeded : public Error {
 public:
  using Error::Error;
};

/// A post-condition check of the library failed.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace mesval
