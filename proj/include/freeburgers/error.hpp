#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace freeburgers {

enum class ErrorCode {
  invalid_parameter,
  invalid_domain,
  invalid_input,
  composition_undefined,
  not_invertible,
  branch_undefined,
  s_undefined,
  degenerate_measure,
  out_of_domain,
  inversion_failed,
  solver_failed,
  domain_escape,
  evolution_failed,
  step_failed,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Solver failures optionally carry the index of the grid point that failed.
class SolverError : public Error {
 public:
  SolverError(ErrorCode code, const std::string& what, long point = -1)
      : Error(code, what), point_(point) {}
  long point() const noexcept { return point_; }

 private:
  long point_;
};

}  // namespace freeburgers
