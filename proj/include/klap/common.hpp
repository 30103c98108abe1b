#pragma once

#include <stdexcept>
#include <string>

namespace klap {

// Exception hierarchy used across the library. Every error carries a
// human-readable message; callers that need finer dispatch catch the
// concrete type.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Dimension mismatch between distributions, kernels, couplings.
class ShapeError : public Error {
public:
  using Error::Error;
};

// Parameter outside its admissible range (alpha, epsilon, weights, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

// Structurally unusable input (all-zero vector, empty alphabet, ...).
class DegenerateInputError : public Error {
public:
  using Error::Error;
};

// Positivity / support requirement violated (e.g. log of a zero kernel
// entry). The message points the caller to support_floor when that is
// the remedy.
class SupportError : public Error {
public:
  using Error::Error;
};

// Inconsistent solver or scenario configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Request exceeds a documented scale guard (brute-force enumerations).
class ScaleGuardError : public Error {
public:
  using Error::Error;
};

// Constraint system has no solution (q not realizable under the kernel).
class InfeasibleError : public Error {
public:
  InfeasibleError(const std::string& msg, double best_residual)
      : Error(msg), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

private:
  double best_residual_;
};

// Tolerance for "weights sum to one" checks throughout the library.
inline constexpr double kSimplexSumTol = 1e-12;

}  // namespace klap
