#pragma once

#include <stdexcept>
#include <string>

namespace cbrw {

// Base class for all library errors so callers can catch one type.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input fails a construction invariant (law, model, config field).
struct ValidationError : Error {
  using Error::Error;
};

// Rate target lies outside the reachable set (a > max step etc.).
struct InfeasibleRateError : Error {
  using Error::Error;
};

// Rate function requested left of the implemented branch (a < psi'(0)).
struct OutOfBranchError : Error {
  using Error::Error;
};

// Model has no Malthusian root: m (1 - q_esc) <= 1, or root below the
// resolvable floor.
struct SubcriticalModelError : Error {
  using Error::Error;
};

// DP or table would exceed the configured memory budget.
struct MemoryBudgetError : Error {
  using Error::Error;
};

// Renewal sequence has period > 1 where a pointwise limit was requested.
struct PeriodicSequenceError : Error {
  using Error::Error;
};

// Operation defined only for aperiodic walks (d = 1).
struct UnsupportedPeriodError : Error {
  using Error::Error;
};

// Catalyst transfer matrix is reducible.
struct ReducibleMatrixError : Error {
  using Error::Error;
};

// Iterative solver did not reach its tolerance within the cap.
struct ConvergenceError : Error {
  using Error::Error;
};

// Config file missing keys, bad types, or unparseable syntax.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace cbrw
