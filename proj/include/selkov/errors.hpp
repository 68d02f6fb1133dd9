#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace selkov {

enum class ErrorKind {
  NonFiniteState,
  MismatchedShapes,
  SolverDiverged,
  EmptyWindow,
  EmptyMeasure,
  ConfigRejected,
  ConditionViolated,
  ParseError,
  EmptyStudy,
  IoError,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// A parameter condition that a configuration breaches.
struct Violation {
  std::string name;      // e.g. "lambda > 16 beta^2"
  double actual = 0.0;   // value observed
  double required = 0.0; // threshold it was compared to
  std::string detail;
};

/// Raised by config validation; carries every breached condition, not just the first.
class ConditionViolated : public Error {
 public:
  explicit ConditionViolated(std::vector<Violation> violations);

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Step failure with the index of the step that failed inside a trajectory.
class StepFailed : public Error {
 public:
  StepFailed(ErrorKind kind, std::size_t step, const std::string& what)
      : Error(kind, "step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace selkov
