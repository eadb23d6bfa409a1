#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freeburgers/error.hpp"
#include "freeburgers/measures.hpp"
#include "freeburgers/series.hpp"
#include "freeburgers/transforms.hpp"

namespace freeburgers {

enum class Family { dyson, wishart, chiral };

std::string_view to_string(Family f);
Family parse_family(std::string_view name);

struct EvolutionProblem {
  Family family = Family::dyson;
  double lambda = 1.0;
  CauchyField initial_field;
  MeasureSpec initial_measure;

  /// Checks lambda >= 0 and the family/domain pairing.
  static EvolutionProblem create(Family family, double lambda, CauchyField field, MeasureSpec initial);
};

struct SolverOptions {
  /// Relative residual bound: |g - F(g)| / max(1, |g|), or |1/g - 1/F(g)| / max(1, |1/g|)
  /// for the reciprocal equations.
  double tolerance = 1e-12;
  int max_newton = 60;
  int max_fixed_point = 4000;
  double theta = 0.5;
  int max_refinements = 8;
  /// Repeat the continuation with halved steps and flag disagreement above 1e-6.
  bool check_branch = false;
};

struct PointSolution {
  cplx g;
  double residual = 0.0;
  int continuation_steps = 0;
  bool branch_flag = false;
};

/// g = G0(z - t g).
cplx solve_dyson_point(const CauchyField& G0, double t, cplx z);
/// 1/g = t + 1/G0((1 - t g)((1 - lambda) t + (1 - t g) z)).
cplx solve_wishart_point(const CauchyField& G0, double lambda, double t, cplx z);
/// Chiral flow through the square push-forward: z G_m(z^2) with m the Wishart
/// flow of the push-forward of the initial measure.
cplx solve_chiral_point(const CauchyField& G0, double lambda, double t, cplx z);
/// Direct fixed point of the chiral functional equation; used as a verifier.
cplx solve_chiral_point_direct(const CauchyField& G0, double lambda, double t, cplx z);

PointSolution solve_point(const EvolutionProblem& problem, double t, cplx z,
                          const SolverOptions& options = {});
PointSolution solve_chiral_direct(const CauchyField& G0, double lambda, double t, cplx z,
                                  const SolverOptions& options = {});

/// |g - G0(z - t g)|.
double dyson_residual(const CauchyField& G0, double t, cplx z, cplx g);
/// |1/g - (right-hand side)| for the reciprocal equations 1/G = t + ... and 1/G = t/z + ....
double wishart_residual(const CauchyField& G0, double lambda, double t, cplx z, cplx g);
double chiral_residual(const CauchyField& G0, double lambda, double t, cplx z, cplx g);

/// Field backed by pointwise solves of the problem at time t.
CauchyField evolved_field(const EvolutionProblem& problem, double t, SolverOptions options = {});

struct EvolutionDiagnostics {
  double max_residual = 0.0;
  int continuation_steps = 0;
  std::vector<long> failures;
  std::vector<long> branch_flags;
  double raw_mass = 1.0;
  /// Dyson only: max |G_t(z) - G_0(z - t G_t(z))| and min Im(z - t G_t(z)).
  double subordination_residual = 0.0;
  double min_subordination_imag = 0.0;
};

struct EvolutionResult {
  double t = 0.0;
  std::vector<double> x_grid;
  std::vector<double> eps_schedule;
  /// g_values[e][i] = G_t(x_grid[i] + i eps_schedule[e]).
  std::vector<std::vector<cplx>> g_values;
  MeasureSpec recovered;
  EvolutionDiagnostics diagnostics;
};

class EvolutionFailure : public Error {
 public:
  EvolutionFailure(const std::string& what, EvolutionDiagnostics diagnostics)
      : Error(ErrorCode::evolution_failed, what), diagnostics_(std::move(diagnostics)) {}
  const EvolutionDiagnostics& diagnostics() const noexcept { return diagnostics_; }

 private:
  EvolutionDiagnostics diagnostics_;
};

/// An x-grid covering the support at time t (log-refined near 0 for Wishart with lambda < 1).
std::vector<double> default_x_grid(const EvolutionProblem& problem, double t, int points);

EvolutionResult evolve(const EvolutionProblem& problem, double t, std::span<const double> x_grid,
                       std::span<const double> eps_schedule = kDefaultEpsSchedule,
                       SolverOptions options = {.check_branch = true});

/// kappa_2 += t.
CumulantSequence r_evolve_dyson(const CumulantSequence& r0, double t);
/// R_t(z) = R_0(z / (1 - t z)) / (1 - t z) + lambda t z / (1 - t z).
CumulantSequence r_evolve_wishart(const CumulantSequence& r0, double lambda, double t);
/// Chiral flow of a symmetric R_0 through the square push-forward and the Wishart law.
CumulantSequence r_evolve_chiral(const CumulantSequence& r0, double lambda, double t);

/// Max coefficient of LHS - RHS of the chiral R-transform identity.
double verify_chiral_r_identity(const CumulantSequence& r_t, const CumulantSequence& r0,
                                double lambda, double t);

/// S(z q(z)) for q(0) > 0, keeping the half-integer prefactor of S.
STransformSeries compose_prefactored(const STransformSeries& s, const TruncatedSeries& q);

/// Residuals of the S-transform identities; unset entries do not apply.
struct SIdentityResiduals {
  std::optional<double> multiplicative;  // S_w = S_d sqrt(S_m)
  std::optional<double> dyson;           // time evolution of S for the Dyson flow
  std::optional<double> wishart;         // time evolution of S for the Wishart flow
  std::optional<double> chiral;          // time evolution of S for the chiral flow
  std::vector<std::string> skipped;
};

/// Residual of each identity given S of the initial and evolved measures.
double s_identity_dyson(const STransformSeries& s_t, const STransformSeries& s_0, double t);
double s_identity_wishart(const STransformSeries& s_t, const STransformSeries& s_0, double lambda, double t);
double s_identity_chiral(const STransformSeries& s_t, const STransformSeries& s_0, double lambda, double t);
double s_identity_multiplicative(const STransformSeries& s_w, const STransformSeries& s_m);

/// Residuals of the four equivalent statements linking a symmetric mu and nu = mu^(2).
struct PushForwardResiduals {
  double measure = 0.0;  // relative moment gap between mu^(2) and nu
  double cauchy = 0.0;   // max |G_mu(z) - z G_nu(z^2)| over the probe points
  double r = 0.0;        // R_mu(z) = R_nu(z^2 / (R_mu(z) + 1))
  double s = 0.0;        // S_mu = S_d sqrt(S_nu)
};

PushForwardResiduals square_pushforward_residuals(const MeasureSpec& mu, const CauchyField& mu_field,
                                                  const MeasureSpec& nu, const CauchyField& nu_field,
                                                  int order, std::span<const cplx> probes);

/// Series route: initial moments -> cumulants -> R-evolution -> moments -> S.
SIdentityResiduals verify_s_identities(const EvolutionProblem& problem, double t, int order);

struct ExplicitSolution {
  CumulantSequence kappa;
  STransformSeries s;
};

/// Dyson flow from the Bernoulli measure d_a.
ExplicitSolution explicit_wa(double a, double t, int order);
/// Wishart flow from delta_b.
ExplicitSolution explicit_ma(double lambda, double b, double t, int order);

}  // namespace freeburgers
