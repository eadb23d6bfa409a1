#include "freeburgers/error.hpp"

namespace freeburgers {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::invalid_domain: return "invalid-domain";
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::composition_undefined: return "composition-undefined";
    case ErrorCode::not_invertible: return "not-invertible";
    case ErrorCode::branch_undefined: return "branch-undefined";
    case ErrorCode::s_undefined: return "s-undefined";
    case ErrorCode::degenerate_measure: return "degenerate-measure";
    case ErrorCode::out_of_domain: return "out-of-domain";
    case ErrorCode::inversion_failed: return "inversion-failed";
    case ErrorCode::solver_failed: return "solver-failed";
    case ErrorCode::domain_escape: return "domain-escape";
    case ErrorCode::evolution_failed: return "evolution-failed";
    case ErrorCode::step_failed: return "step-failed";
  }
  return "unknown";
}

}  // namespace freeburgers
