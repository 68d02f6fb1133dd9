#include "selkov/errors.hpp"

#include <string>

namespace selkov {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::MismatchedShapes: return "MismatchedShapes";
    case ErrorKind::SolverDiverged: return "SolverDiverged";
    case ErrorKind::EmptyWindow: return "EmptyWindow";
    case ErrorKind::EmptyMeasure: return "EmptyMeasure";
    case ErrorKind::ConfigRejected: return "ConfigRejected";
    case ErrorKind::ConditionViolated: return "ConditionViolated";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::EmptyStudy: return "EmptyStudy";
    case ErrorKind::IoError: return "IoError";
  }
  return "Error";
}

namespace {

std::string describe(const std::vector<Violation>& vs) {
  std::string s;
  for (const auto& v : vs) {
    if (!s.empty()) s += "; ";
    s += v.name + " (actual " + std::to_string(v.actual) + ", required " +
         std::to_string(v.required) + ")";
    if (!v.detail.empty()) s += " " + v.detail;
  }
  return s;
}

}  // namespace

ConditionViolated::ConditionViolated(std::vector<Violation> violations)
    : Error(ErrorKind::ConditionViolated, describe(violations)), violations_(std::move(violations)) {}

}  // namespace selkov
