#ifndef PLASTHOM_ERRORS_HPP
#define PLASTHOM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace plasthom {

// Base of every failure thrown by this library. The message always names the
// violated precondition or the quantity that failed to converge.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// |det| at or below the singularity tolerance in an inverse.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

// Volume-preserving retraction asked for a matrix with det <= 0.
class NonPositiveDeterminant : public Error {
 public:
  using Error::Error;
};

// Input outside the principal-branch convergence region of the matrix log.
class LogDivergence : public Error {
 public:
  using Error::Error;
};

// Velocity argument is not tangent to SL(3) at the given base point.
class NotTangent : public Error {
 public:
  using Error::Error;
};

// Plastic value outside the admissible compact set K.
class OutsideK : public Error {
 public:
  using Error::Error;
};

// Iteration cap hit with the convergence measure still above tolerance.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

// Monte-Carlo validation found a witness violating a declared bound.
class AssumptionViolated : public Error {
 public:
  using Error::Error;
};

// Interpolation query outside the tabulated box.
class TableOutOfRange : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent configuration input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Energy evaluation asked for a non-positive period epsilon.
class EpsNonPositive : public Error {
 public:
  using Error::Error;
};

// Geometric precondition failures in the gluing decomposition.
class NotCompactlyContained : public Error {
 public:
  using Error::Error;
};

}  // namespace plasthom

#endif
