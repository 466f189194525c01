#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace covertime {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (edge lists, JSON, CSV, generator specs).
class ParseError : public Error {
public:
  using Error::Error;
};

// Input that parses but violates a structural invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

class SelfLoopError : public ValidationError {
public:
  explicit SelfLoopError(std::size_t v)
      : ValidationError("self-loop at vertex " + std::to_string(v)), vertex(v) {}
  SelfLoopError(std::size_t v, const std::string& label)
      : ValidationError("self-loop at vertex " + label + " (index " + std::to_string(v) + ")"), vertex(v) {}
  std::size_t vertex;
};

class NonPositiveConductanceError : public ValidationError {
public:
  NonPositiveConductanceError(std::size_t u, std::size_t v, double c)
      : ValidationError("non-positive conductance " + std::to_string(c) + " on edge (" +
                        std::to_string(u) + "," + std::to_string(v) + ")"),
        u(u), v(v), conductance(c) {}
  std::size_t u, v;
  double conductance;
};

class DisconnectedError : public ValidationError {
public:
  explicit DisconnectedError(std::size_t components)
      : ValidationError("network is disconnected (" + std::to_string(components) + " components)"),
        components(components) {}
  std::size_t components;
};

class InvalidParamError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

// Numerical breakdown: singular factorizations, sketch validation exhausted.
class NumericalError : public Error {
public:
  using Error::Error;
};

class FactorizationFailure : public NumericalError {
public:
  FactorizationFailure(const std::string& what, double condition_estimate)
      : NumericalError(what + " (condition estimate " + std::to_string(condition_estimate) + ")"),
        condition_estimate(condition_estimate) {}
  double condition_estimate;
};

class SketchValidationFailed : public NumericalError {
public:
  SketchValidationFailed(double worst_ratio, std::size_t u, std::size_t v)
      : NumericalError("resistance sketch validation failed; worst pair (" + std::to_string(u) +
                       "," + std::to_string(v) + ") ratio " + std::to_string(worst_ratio)),
        worst_ratio(worst_ratio), u(u), v(v) {}
  double worst_ratio;
  std::size_t u, v;
};

class StepBudgetExceeded : public Error {
public:
  explicit StepBudgetExceeded(std::size_t budget)
      : Error("random walk exceeded step budget of " + std::to_string(budget) + " jumps"),
        budget(budget) {}
  std::size_t budget;
};

}  // namespace covertime
