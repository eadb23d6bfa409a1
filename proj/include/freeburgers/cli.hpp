#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "freeburgers/evolution.hpp"
#include "freeburgers/io.hpp"
#include "freeburgers/sde.hpp"

namespace freeburgers {

enum ExitCode : int {
  exit_ok = 0,
  exit_check_failed = 1,
  exit_solver_failure = 2,
  exit_invalid_input = 3,
};

/// Maps a library error to the process exit code.
int exit_code_for(const Error& e);

EvolutionProblem problem_from(const RunManifest& m, const InitialCondition& ic);

/// Free cumulants of the evolved measure by the series route.
CumulantSequence series_cumulants(const EvolutionProblem& problem, const MeasureSpec& initial, double t, int order);

/// Lambda used by `simulate`: --nu, when nonzero, overrides --lambda.
double simulate_lambda(const RunManifest& m);

/// Particle system for `simulate`. Dyson starts from the quantiles of the
/// initial measure; Wishart and chiral require dirac:b=0.
SdeConfig sde_config_from(const RunManifest& m, const InitialCondition& ic);

struct CheckRow {
  std::string name;
  std::optional<double> value;  // unset when skipped
  double tolerance = 0.0;
  std::string note;

  bool passed() const { return !value || *value <= tolerance; }
};

/// Residual checks run by `verify`.
std::vector<CheckRow> verify_rows(const RunManifest& m, const InitialCondition& ic);

/// Each command writes its outputs under m.out_dir and logs a summary to `log`.
int cmd_evolve(const RunManifest& m, std::ostream& log);
int cmd_verify(const RunManifest& m, std::ostream& log);
int cmd_simulate(const RunManifest& m, std::ostream& log, bool trajectory = false);

/// Parses argv and dispatches; returns the exit code.
int run_cli(int argc, char** argv);

}  // namespace freeburgers
