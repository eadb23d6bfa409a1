#include "freeburgers/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>

#include "freeburgers/parallel.hpp"

namespace freeburgers {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::dyson: return "dyson";
    case Family::wishart: return "wishart";
    case Family::chiral: return "chiral";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "dyson") return Family::dyson;
  if (name == "wishart") return Family::wishart;
  if (name == "chiral") return Family::chiral;
  throw Error(ErrorCode::invalid_input, "unknown family '" + std::string(name) + "'");
}

EvolutionProblem EvolutionProblem::create(Family family, double lambda, CauchyField field,
                                          MeasureSpec initial) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::invalid_parameter, "lambda must be >= 0");
  }
  if (!field) throw Error(ErrorCode::invalid_input, "missing initial Cauchy field");
  if (family == Family::wishart && initial.support().first < 0.0) {
    throw Error(ErrorCode::invalid_domain, "wishart flow needs an initial measure on the half-line");
  }
  if (family == Family::chiral && initial.domain() != DomainTag::symmetric) {
    throw Error(ErrorCode::invalid_domain, "chiral flow needs a symmetric initial measure");
  }
  return {family, lambda, std::move(field), std::move(initial)};
}

// ---------------------------------------------------------------------------
// Functional equations written as g = F(g)

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Equation {
  std::function<cplx(cplx)> map;
  std::function<bool(cplx)> admissible;
  // Trivial factor divided out of the residual during iteration, or empty.
  std::function<cplx(cplx)> deflate;
  // Residual measured as 1/g - 1/F(g) instead of g - F(g).
  bool reciprocal = false;
};

bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

cplx dyson_map(const CauchyField& G0, double t, cplx z, cplx g) { return G0(z - t * g); }

cplx wishart_map(const CauchyField& G0, double lambda, double t, cplx z, cplx g) {
  const cplx a = 1.0 - t * g;
  const cplx w = a * ((1.0 - lambda) * t + a * z);
  return 1.0 / (t + 1.0 / G0(w));
}

cplx chiral_map(const CauchyField& G0, double lambda, double t, cplx z, cplx g) {
  const cplx a = 1.0 - (t / z) * g;
  const cplx u = std::sqrt(a * ((1.0 - lambda) * t + a * z * z));
  return 1.0 / (t / z + u / (z * G0(u)));
}

Equation dyson_equation(const CauchyField& G0, double t, cplx z) {
  return {[&G0, t, z](cplx g) { return dyson_map(G0, t, z, g); },
          [t, z](cplx g) { return finite(g) && g.imag() < 0.0 && (z - t * g).imag() > 0.0; },
          {},
          false};
}

// The argument of G0 stays in the upper half-plane along the physical branch.
Equation wishart_equation(const CauchyField& G0, double lambda, double t, cplx z) {
  return {[&G0, lambda, t, z](cplx g) { return wishart_map(G0, lambda, t, z, g); },
          [lambda, t, z](cplx g) {
            const cplx a = 1.0 - t * g;
            return finite(g) && g.imag() < 0.0 && (a * ((1.0 - lambda) * t + a * z)).imag() > 0.0;
          },
          // g = 1/t solves the equation whenever G0 has a pole at 0.
          [t](cplx g) { return 1.0 - t * g; },
          true};
}

// Same constraint on Q = (1 - t g / z)((1 - lambda) t + (1 - t g / z) z^2), mirrored for Re z < 0.
Equation chiral_equation(const CauchyField& G0, double lambda, double t, cplx z) {
  return {[&G0, lambda, t, z](cplx g) { return chiral_map(G0, lambda, t, z, g); },
          [lambda, t, z](cplx g) {
            if (!finite(g) || !(g.imag() < 0.0)) return false;
            const cplx a = 1.0 - (t / z) * g;
            const double q = (a * ((1.0 - lambda) * t + a * z * z)).imag();
            if (z.real() > 0.0) return q > 0.0;
            if (z.real() < 0.0) return q < 0.0;
            return true;
          },
          [t, z](cplx g) { return 1.0 - (t / z) * g; },
          true};
}

// F(g), or NaN where it is undefined.
cplx map_of(const Equation& eq, cplx g) {
  try {
    const cplx f = eq.map(g);
    return finite(f) ? f : cplx(kNaN, kNaN);
  } catch (const Error&) {
    return {kNaN, kNaN};
  }
}

cplx residual_from(const Equation& eq, cplx g, cplx f) {
  return eq.reciprocal ? 1.0 / g - 1.0 / f : g - f;
}

cplx residual_of(const Equation& eq, cplx g) { return residual_from(eq, g, map_of(eq, g)); }

// Residual scale: the iterate for g - F(g), its reciprocal otherwise.
double residual_scale(const Equation& eq, cplx g) {
  return std::max(1.0, eq.reciprocal ? 1.0 / std::abs(g) : std::abs(g));
}

struct Attempt {
  bool ok = false;
  cplx g;
  double residual = kNaN;
};

// Newton with a central-difference derivative and backtracking; damped
// fixed-point iteration takes over when Newton stalls. Steps are judged on the
// deflated residual, convergence on the residual relative to residual_scale.
Attempt solve_fixed_t(const Equation& eq, cplx g, const SolverOptions& o) {
  struct Eval {
    cplx f, r, rd;
  };
  auto eval = [&](cplx x) {
    Eval e;
    e.f = map_of(eq, x);
    e.r = residual_from(eq, x, e.f);
    e.rd = eq.deflate ? e.r / eq.deflate(x) : e.r;
    return e;
  };
  auto usable = [](const Eval& e) { return finite(e.rd) && finite(e.r); };
  if (!eq.admissible(g)) return {};
  Eval cur = eval(g);
  if (!usable(cur)) return {};
  auto converged = [&] { return std::abs(cur.r) <= o.tolerance * residual_scale(eq, g); };
  int fp_budget = o.max_fixed_point;
  double theta = o.theta;
  for (int round = 0; round < 8; ++round) {
    for (int it = 0; it < o.max_newton && !converged(); ++it) {
      const double h = 1e-7 * std::max(std::abs(g), 1e-6);
      const cplx d = (eval(g + h).rd - eval(g - h).rd) / (2.0 * h);
      if (!finite(d) || d == 0.0) break;
      const cplx step = cur.rd / d;
      // Rounding in F bounds the attainable residual; a vanishing Newton step is the limit.
      if (std::abs(step) <= 1e-14 * std::abs(g)) return {true, g, std::abs(cur.r)};
      bool accepted = false;
      double lam = 1.0;
      for (int k = 0; k < 40; ++k, lam *= 0.5) {
        const cplx gn = g - lam * step;
        if (!eq.admissible(gn)) continue;
        const Eval next = eval(gn);
        if (usable(next) && std::abs(next.rd) < std::abs(cur.rd)) {
          g = gn;
          cur = next;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
    if (converged()) return {true, g, std::abs(cur.r)};

    // Damped fixed point until the deflated residual drops tenfold.
    const double target = 0.1 * std::abs(cur.rd);
    double prev = std::abs(cur.rd);
    while (fp_budget-- > 0 && std::abs(cur.rd) > target) {
      const cplx gn = (1.0 - theta) * g + theta * cur.f;
      const Eval next = eq.admissible(gn) ? eval(gn) : Eval{};
      if (!eq.admissible(gn) || !usable(next)) {
        theta = std::max(0.5 * theta, 1e-8);
        continue;
      }
      const double m = std::abs(next.rd);
      if (m > prev) theta = std::max(0.5 * theta, 1e-8);
      prev = std::abs(cur.rd);
      g = gn;
      cur = next;
    }
    if (converged()) return {true, g, std::abs(cur.r)};
    if (fp_budget <= 0) break;
  }
  return {converged(), g, std::abs(cur.r)};
}

constexpr double kMaxRelativeMove = 0.25;

PointSolution continuation(const std::function<Equation(double)>& eq_at, cplx g0, double t,
                           const SolverOptions& o, double first_dt) {
  if (t == 0.0) return {g0, std::abs(residual_of(eq_at(0.0), g0)), 0, false};
  double tc = 0.0;
  double dt = first_dt;
  cplx g = g0;
  cplx g_prev = g0;
  double t_prev = 0.0;
  int refinements = 0;
  int steps = 0;
  double residual = 0.0;
  while (tc < t) {
    const double tn = std::min(t, tc + dt);
    const Equation eq = eq_at(tn);
    // Linear extrapolation along t when it lands on an admissible point.
    cplx guess = g;
    if (steps > 0) {
      const cplx extrap = g + (g - g_prev) * ((tn - tc) / (tc - t_prev));
      if (eq.admissible(extrap)) guess = extrap;
    }
    Attempt a = solve_fixed_t(eq, guess, o);
    if (!a.ok && guess != g) a = solve_fixed_t(eq, g, o);
    // A large relative move means Newton left the branch; retry with a shorter step.
    if (a.ok && std::abs(a.g - g) > kMaxRelativeMove * std::abs(g)) a.ok = false;
    if (a.ok) {
      g_prev = g;
      t_prev = tc;
      g = a.g;
      tc = tn;
      residual = a.residual;
      ++steps;
      refinements = 0;
      dt *= 1.5;
    } else {
      if (++refinements > o.max_refinements) {
        throw SolverError(ErrorCode::solver_failed,
                          "no convergence at t = " + std::to_string(tn) + " (residual " +
                              std::to_string(a.residual) + ")");
      }
      dt *= 0.5;
    }
  }
  return {g, residual, steps, false};
}

PointSolution continue_with_check(const std::function<Equation(double)>& eq_at, cplx g0, double t,
                                  const SolverOptions& o) {
  // t |g| sets the size of the perturbation, so large initial values start with small steps.
  const double dt = std::min({0.1, t / 10.0, 0.05 / std::abs(g0)});
  PointSolution base = continuation(eq_at, g0, t, o, dt);
  if (o.check_branch && t > 0.0) {
    try {
      const PointSolution fine = continuation(eq_at, g0, t, o, 0.5 * dt);
      base.branch_flag = std::abs(fine.g - base.g) > 1e-6;
    } catch (const SolverError&) {
      base.branch_flag = true;
    }
  }
  return base;
}

CauchyField square_root_field(const CauchyField& G0) {
  const double r = G0.support_radius();
  return CauchyField(
      [G0](cplx u) {
        const cplx s = std::sqrt(u);
        return G0(s) / s;
      },
      G0.kind(), r * r);
}

}  // namespace

double dyson_residual(const CauchyField& G0, double t, cplx z, cplx g) {
  return std::abs(g - dyson_map(G0, t, z, g));
}

double wishart_residual(const CauchyField& G0, double lambda, double t, cplx z, cplx g) {
  return std::abs(1.0 / g - 1.0 / wishart_map(G0, lambda, t, z, g));
}

double chiral_residual(const CauchyField& G0, double lambda, double t, cplx z, cplx g) {
  return std::abs(1.0 / g - 1.0 / chiral_map(G0, lambda, t, z, g));
}

namespace {

void require_upper(double t, cplx z) {
  if (!(t >= 0.0)) throw Error(ErrorCode::invalid_parameter, "t must be >= 0");
  if (!(z.imag() > 0.0)) throw Error(ErrorCode::out_of_domain, "point solves need Im z > 0");
}

PointSolution dyson_solution(const CauchyField& G0, double t, cplx z, const SolverOptions& o) {
  return continue_with_check([&](double s) { return dyson_equation(G0, s, z); }, G0(z), t, o);
}

PointSolution wishart_solution(const CauchyField& G0, double lambda, double t, cplx z,
                               const SolverOptions& o) {
  return continue_with_check([&](double s) { return wishart_equation(G0, lambda, s, z); }, G0(z), t, o);
}

PointSolution chiral_solution(const CauchyField& G0, double lambda, double t, cplx z,
                              const SolverOptions& o) {
  if (t == 0.0) return {G0(z), 0.0, 0, false};
  if (z.real() == 0.0) {
    // G is purely imaginary on the axis; symmetrize a solve just off it.
    PointSolution s = chiral_solution(G0, lambda, t, cplx(1e-6 * z.imag(), z.imag()), o);
    s.g = cplx(0.0, s.g.imag());
    s.residual = chiral_residual(G0, lambda, t, z, s.g);
    return s;
  }
  if (z.real() < 0.0) {
    // Symmetric measures satisfy G(z) = -conj G(-conj z).
    PointSolution s = chiral_solution(G0, lambda, t, -std::conj(z), o);
    s.g = -std::conj(s.g);
    return s;
  }
  const CauchyField Gm = square_root_field(G0);
  PointSolution s = wishart_solution(Gm, lambda, t, z * z, o);
  s.g *= z;
  s.residual = chiral_residual(G0, lambda, t, z, s.g);
  return s;
}

}  // namespace

PointSolution solve_chiral_direct(const CauchyField& G0, double lambda, double t, cplx z,
                                  const SolverOptions& o) {
  require_upper(t, z);
  return continue_with_check([&](double s) { return chiral_equation(G0, lambda, s, z); }, G0(z), t, o);
}

PointSolution solve_point(const EvolutionProblem& p, double t, cplx z, const SolverOptions& o) {
  require_upper(t, z);
  switch (p.family) {
    case Family::dyson: return dyson_solution(p.initial_field, t, z, o);
    case Family::wishart: return wishart_solution(p.initial_field, p.lambda, t, z, o);
    case Family::chiral: return chiral_solution(p.initial_field, p.lambda, t, z, o);
  }
  throw Error(ErrorCode::invalid_input, "unknown family");
}

cplx solve_dyson_point(const CauchyField& G0, double t, cplx z) {
  require_upper(t, z);
  return dyson_solution(G0, t, z, {}).g;
}

cplx solve_wishart_point(const CauchyField& G0, double lambda, double t, cplx z) {
  require_upper(t, z);
  if (!(lambda >= 0.0)) throw Error(ErrorCode::invalid_parameter, "lambda must be >= 0");
  return wishart_solution(G0, lambda, t, z, {}).g;
}

cplx solve_chiral_point(const CauchyField& G0, double lambda, double t, cplx z) {
  require_upper(t, z);
  if (!(lambda >= 0.0)) throw Error(ErrorCode::invalid_parameter, "lambda must be >= 0");
  return chiral_solution(G0, lambda, t, z, {}).g;
}

cplx solve_chiral_point_direct(const CauchyField& G0, double lambda, double t, cplx z) {
  return solve_chiral_direct(G0, lambda, t, z, {}).g;
}

// ---------------------------------------------------------------------------
// Grids and evolution

namespace {

// Interval containing the support at time t.
std::pair<double, double> support_bound(const EvolutionProblem& p, double t) {
  const auto [lo0, hi0] = p.initial_measure.support();
  switch (p.family) {
    case Family::dyson: return {lo0 - 2.0 * std::sqrt(t), hi0 + 2.0 * std::sqrt(t)};
    case Family::wishart: {
      const double r = std::sqrt(std::max(hi0, 0.0)) + std::sqrt(t) * (1.0 + std::sqrt(p.lambda));
      return {0.0, r * r};
    }
    case Family::chiral: {
      const double r0 = p.initial_measure.support_radius();
      const double r = r0 + std::sqrt(t) * (1.0 + std::sqrt(p.lambda));
      return {-r, r};
    }
  }
  return {lo0, hi0};
}

}  // namespace

CauchyField evolved_field(const EvolutionProblem& problem, double t, SolverOptions options) {
  options.check_branch = false;
  const auto [lo, hi] = support_bound(problem, t);
  return CauchyField([problem, t, options](cplx z) { return solve_point(problem, t, z, options).g; },
                     FieldKind::fixed_point, std::max(std::abs(lo), std::abs(hi)));
}

std::vector<double> default_x_grid(const EvolutionProblem& problem, double t, int points) {
  if (points < 3) throw Error(ErrorCode::invalid_parameter, "grid needs >= 3 points");
  auto [lo, hi] = support_bound(problem, t);
  const double margin = 0.05 * (hi - lo) + 0.05;
  std::vector<double> grid;
  if (problem.family == Family::chiral) {
    const double c = hi + margin;
    const int n = points % 2 ? points : points + 1;
    for (int i = 0; i < n; ++i) grid.push_back(c * (2.0 * i - (n - 1)) / (n - 1));
    return grid;
  }
  if (problem.family == Family::wishart) {
    lo = 0.0;
    hi += margin;
  } else {
    lo -= margin;
    hi += margin;
  }
  for (int i = 0; i < points; ++i) grid.push_back(lo + (hi - lo) * i / (points - 1));
  if (problem.family == Family::wishart && problem.lambda < 1.0) {
    // Log-spaced points between 0 and the first uniform node.
    const double h = grid[1];
    std::vector<double> refined{0.0};
    const int extra = 30;
    for (int k = 0; k < extra; ++k) refined.push_back(h * std::pow(10.0, -4.0 + 4.0 * k / extra));
    refined.insert(refined.end(), grid.begin() + 1, grid.end());
    grid = std::move(refined);
  }
  return grid;
}

EvolutionResult evolve(const EvolutionProblem& problem, double t, std::span<const double> x_grid,
                       std::span<const double> eps_schedule, SolverOptions options) {
  if (!(t >= 0.0)) throw Error(ErrorCode::invalid_parameter, "t must be >= 0");
  EvolutionResult out;
  out.t = t;
  out.x_grid.assign(x_grid.begin(), x_grid.end());
  out.eps_schedule.assign(eps_schedule.begin(), eps_schedule.end());
  const std::size_t n = x_grid.size();
  const std::size_t ne = eps_schedule.size();
  if (n < 3) throw Error(ErrorCode::invalid_parameter, "grid needs >= 3 points");
  out.g_values.assign(ne, std::vector<cplx>(n));

  if (t == 0.0) {
    for (std::size_t e = 0; e < ne; ++e) {
      for (std::size_t i = 0; i < n; ++i) out.g_values[e][i] = problem.initial_field(cplx(x_grid[i], eps_schedule[e]));
    }
    out.recovered = problem.initial_measure;
    return out;
  }

  std::vector<PointSolution> sol(n * ne);
  std::vector<char> failed(n * ne, 0);
  parallel_for(n * ne, [&](std::size_t k) {
    const cplx z(x_grid[k % n], eps_schedule[k / n]);
    try {
      sol[k] = solve_point(problem, t, z, options);
    } catch (const Error&) {
      failed[k] = 1;
    }
  });

  EvolutionDiagnostics& d = out.diagnostics;
  d.min_subordination_imag = std::numeric_limits<double>::infinity();
  std::size_t nfailed = 0;
  for (std::size_t k = 0; k < n * ne; ++k) {
    const long i = static_cast<long>(k % n);
    if (failed[k]) {
      ++nfailed;
      if (std::find(d.failures.begin(), d.failures.end(), i) == d.failures.end()) d.failures.push_back(i);
      continue;
    }
    const PointSolution& s = sol[k];
    d.max_residual = std::max(d.max_residual, s.residual);
    d.continuation_steps = std::max(d.continuation_steps, s.continuation_steps);
    if (s.branch_flag && std::find(d.branch_flags.begin(), d.branch_flags.end(), i) == d.branch_flags.end()) {
      d.branch_flags.push_back(i);
    }
    out.g_values[k / n][k % n] = s.g;
    if (problem.family == Family::dyson) {
      const cplx z(x_grid[k % n], eps_schedule[k / n]);
      const cplx omega = z - t * s.g;
      d.subordination_residual = std::max(d.subordination_residual, std::abs(s.g - problem.initial_field(omega)));
      d.min_subordination_imag = std::min(d.min_subordination_imag, omega.imag());
    }
  }
  std::sort(d.failures.begin(), d.failures.end());
  std::sort(d.branch_flags.begin(), d.branch_flags.end());
  if (problem.family != Family::dyson) d.min_subordination_imag = 0.0;
  if (static_cast<double>(nfailed) > 0.01 * static_cast<double>(n * ne)) {
    throw EvolutionFailure(std::to_string(nfailed) + " of " + std::to_string(n * ne) + " point solves failed", d);
  }

  // Patch isolated failures from their neighbours.
  for (std::size_t e = 0; e < ne; ++e) {
    auto& row = out.g_values[e];
    for (std::size_t i = 0; i < n; ++i) {
      if (!failed[e * n + i]) continue;
      std::size_t l = i, r = i;
      while (l > 0 && failed[e * n + l]) --l;
      while (r + 1 < n && failed[e * n + r]) ++r;
      const bool lok = !failed[e * n + l];
      const bool rok = !failed[e * n + r];
      if (lok && rok) {
        const double w = (x_grid[i] - x_grid[l]) / (x_grid[r] - x_grid[l]);
        row[i] = row[l] + w * (row[r] - row[l]);
      } else {
        row[i] = lok ? row[l] : row[r];
      }
    }
  }

  DomainTag hint = DomainTag::real_line;
  if (problem.family == Family::wishart) hint = DomainTag::nonneg_halfline;
  if (problem.family == Family::chiral ||
      (problem.family == Family::dyson && problem.initial_measure.domain() == DomainTag::symmetric)) {
    hint = DomainTag::symmetric;
  }
  InversionReport inv = stieltjes_invert_values(evolved_field(problem, t, options), x_grid,
                                                eps_schedule, out.g_values, hint);
  out.recovered = std::move(inv.measure);
  d.raw_mass = inv.raw_mass;
  return out;
}

// ---------------------------------------------------------------------------
// Series laws

namespace {

bool is_even_series(const TruncatedSeries& s) {
  double scale = 0.0;
  for (double c : s.coeffs()) scale = std::max(scale, std::abs(c));
  for (int n = 1; n <= s.order(); n += 2) {
    if (std::abs(s[n]) > 1e-10 * (1.0 + scale)) return false;
  }
  return true;
}

TruncatedSeries z_power(int power, int order) { return TruncatedSeries::monomial(1.0, power, order); }
TruncatedSeries one(int order) { return TruncatedSeries::constant(1.0, order); }

}  // namespace

CumulantSequence r_evolve_dyson(const CumulantSequence& r0, double t) {
  if (r0.order() < 2) throw Error(ErrorCode::invalid_input, "need at least two cumulants");
  CumulantSequence out = r0;
  out.values[1] += t;
  return out;
}

CumulantSequence r_evolve_wishart(const CumulantSequence& r0, double lambda, double t) {
  const int k = r0.order();
  const TruncatedSeries inv = reciprocal(one(k) - t * z_power(1, k));
  const TruncatedSeries s = multiply_by_z(inv);
  const TruncatedSeries rt = compose(r0.as_series(), s) * inv + (lambda * t) * s;
  return CumulantSequence::from_series(rt);
}

CumulantSequence r_evolve_chiral(const CumulantSequence& r0, double lambda, double t) {
  const int k = r0.order();
  const TruncatedSeries full = r0.as_series();
  if (!is_even_series(full)) throw Error(ErrorCode::invalid_input, "chiral R-evolution needs a symmetric measure");
  // In w = z^2: r_mu(w) = R_nu(w / (1 + r_mu(w))).
  const TruncatedSeries r_mu = even_part_in_square(full);
  const int h = r_mu.order();
  const TruncatedSeries u = multiply_by_z(reciprocal(r_mu + 1.0));
  const TruncatedSeries r_nu = compose(r_mu, lagrange_invert(u));
  const TruncatedSeries r_nu_t = r_evolve_wishart(CumulantSequence::from_series(r_nu), lambda, t).as_series();
  TruncatedSeries r = r_nu_t;
  for (int it = 0; it <= h + 1; ++it) r = compose(r_nu_t, multiply_by_z(reciprocal(r + 1.0)));
  return CumulantSequence::from_series(substitute_square(r).truncated(k));
}

double verify_chiral_r_identity(const CumulantSequence& r_t, const CumulantSequence& r0, double lambda,
                                double t) {
  const int k = std::min(r_t.order(), r0.order());
  const TruncatedSeries rt = r_t.as_series().truncated(k);
  const TruncatedSeries ri = r0.as_series().truncated(k);
  if (!is_even_series(rt) || !is_even_series(ri)) {
    throw Error(ErrorCode::invalid_input, "chiral identity needs symmetric cumulant sequences");
  }
  const TruncatedSeries z2 = z_power(2, k);
  const double c = (1.0 - lambda) * t;
  const TruncatedSeries lhs = rt + c * z2 / (rt + 1.0);
  const TruncatedSeries disc = one(k) + (2.0 * (2.0 * lambda - 1.0) * t) * z2 + (t * t) * z_power(4, k);
  const TruncatedSeries r_fund = 0.5 * (t * z2 - 1.0 + sqrt_series(disc));
  const TruncatedSeries inner =
      one(k) - (1.0 - lambda) * (reciprocal(rt + 1.0) - reciprocal(rt + 1.0 - t * z2));
  const TruncatedSeries q = multiply_by_z(sqrt_series(inner));
  const TruncatedSeries rhs = r_fund + c * z2 / (r_fund + 1.0) + compose(ri, q);
  return max_abs_diff(lhs, rhs);
}

// ---------------------------------------------------------------------------
// S-transform identities

STransformSeries compose_prefactored(const STransformSeries& s, const TruncatedSeries& q) {
  if (!(q[0] > 0.0)) throw Error(ErrorCode::branch_undefined, "prefactored composition needs q(0) > 0");
  const int k = std::min(s.order(), q.order());
  const TruncatedSeries qk = q.truncated(k);
  const TruncatedSeries inner = compose(s.series.truncated(k), multiply_by_z(qk));
  return {s.half_power, inner * half_power(qk, s.half_power), s.branch};
}

namespace {

void require_half_powers(const STransformSeries& a, const STransformSeries& b, int expected) {
  if (a.half_power != expected || b.half_power != expected) {
    throw Error(ErrorCode::invalid_input, "S-transform prefactors do not match the identity");
  }
}

}  // namespace

double s_identity_dyson(const STransformSeries& s_t, const STransformSeries& s_0, double t) {
  require_half_powers(s_t, s_0, s_t.half_power);
  const int k = std::min(s_t.order(), s_0.order());
  const TruncatedSeries s = s_t.series.truncated(k);
  // (S_t / S_fund)^2 = t z S_t^2 with S_fund = (t z)^{-1/2}.
  const TruncatedSeries a = s_t.half_power == 0 ? t * multiply_by_z(s * s) : t * (s * s);
  if (s_t.half_power != 0 && s_t.half_power != -1) throw Error(ErrorCode::invalid_input, "unsupported prefactor");
  const TruncatedSeries q = one(k) - a;
  const TruncatedSeries lhs = s / q;
  const STransformSeries rhs = compose_prefactored(s_0, q);
  return max_abs_diff(lhs, rhs.series);
}

double s_identity_wishart(const STransformSeries& s_t, const STransformSeries& s_0, double lambda, double t) {
  require_half_powers(s_t, s_0, 0);
  const int k = std::min(s_t.order(), s_0.order());
  const TruncatedSeries s = s_t.series.truncated(k);
  const TruncatedSeries z = z_power(1, k);
  const TruncatedSeries b = t * (z * s);                // S_m / S_fund^2
  const TruncatedSeries c = t * ((z + lambda) * s);     // S_m / S_{m fund}
  const TruncatedSeries lhs = s / ((one(k) - b) * (one(k) - c));
  const TruncatedSeries rhs = compose(s_0.series.truncated(k), multiply_by_z(one(k) - c));
  return max_abs_diff(lhs, rhs);
}

double s_identity_chiral(const STransformSeries& s_t, const STransformSeries& s_0, double lambda, double t) {
  require_half_powers(s_t, s_0, -1);
  const int k = std::min(s_t.order(), s_0.order());
  const TruncatedSeries s = s_t.series.truncated(k);
  const TruncatedSeries z = z_power(1, k);
  const TruncatedSeries inv1z = reciprocal(z + 1.0);
  // (S_w / S_{w fund})^2 with S_{w fund}^2 = ((1 + z)/z) / (t (z + lambda)).
  const TruncatedSeries a = t * (s * s) * (z + lambda) * inv1z;
  const TruncatedSeries num = one(k) - z * a * inv1z;
  const TruncatedSeries den = one(k) - t * z * (s * s) * inv1z;
  const TruncatedSeries q = one(k) - a;
  const TruncatedSeries lhs = sqrt_series(num / den) * s / q;
  const STransformSeries rhs = compose_prefactored(s_0, q);
  return max_abs_diff(lhs, rhs.series);
}

double s_identity_multiplicative(const STransformSeries& s_w, const STransformSeries& s_m) {
  if (s_w.half_power != -1 || s_m.half_power != 0) {
    throw Error(ErrorCode::invalid_input, "S-transform prefactors do not match the identity");
  }
  const int k = std::min(s_w.order(), s_m.order());
  // S_d(z) = sqrt((1 + z)/z).
  const TruncatedSeries rhs = sqrt_series((z_power(1, k) + 1.0) * s_m.series.truncated(k));
  return max_abs_diff(s_w.series.truncated(k), rhs);
}

PushForwardResiduals square_pushforward_residuals(const MeasureSpec& mu, const CauchyField& mu_field,
                                                  const MeasureSpec& nu, const CauchyField& nu_field,
                                                  int order, std::span<const cplx> probes) {
  PushForwardResiduals out;
  const MomentSequence pushed = moments(push_forward_square(mu), order);
  const MomentSequence target = moments(nu, order);
  for (int n = 1; n <= order; ++n) {
    out.measure = std::max(out.measure, std::abs(pushed[n] - target[n]) / std::max(1.0, std::abs(target[n])));
  }
  const CauchyField lifted = cauchy_from_square_pushforward(nu_field);
  for (cplx z : probes) out.cauchy = std::max(out.cauchy, std::abs(mu_field(z) - lifted(z)));
  const TruncatedSeries rmu = r_series(mu, order).as_series();
  const TruncatedSeries rnu = r_series(nu, order).as_series();
  out.r = max_abs_diff(rmu, compose(rnu, TruncatedSeries::monomial(1.0, 2, order) / (rmu + 1.0)));
  out.s = s_identity_multiplicative(s_series(mu, order), s_series(nu, order));
  return out;
}

SIdentityResiduals verify_s_identities(const EvolutionProblem& problem, double t, int order) {
  if (order < 1) throw Error(ErrorCode::invalid_parameter, "order must be >= 1");
  SIdentityResiduals out;
  const MeasureSpec& mu0 = problem.initial_measure;
  const bool symmetric = mu0.domain() == DomainTag::symmetric;
  const int m = symmetric ? 2 * order + 2 : order + 1;
  try {
    if (mu0.atom_at(0.0) >= 1.0 - 1e-12) {
      throw Error(ErrorCode::degenerate_measure, "initial measure is delta_0");
    }
    const MomentSequence tau0 = moments(mu0, m);
    const CumulantSequence r0 = moments_to_cumulants(tau0);
    auto s_of = [&](const MomentSequence& tau) {
      return symmetric ? s_from_symmetric_moments(tau, order) : s_from_moments(tau, order);
    };
    switch (problem.family) {
      case Family::dyson: {
        const MomentSequence tau_t = cumulants_to_moments(r_evolve_dyson(r0, t));
        out.dyson = s_identity_dyson(s_of(tau_t), s_of(tau0), t);
        break;
      }
      case Family::wishart: {
        const MomentSequence tau_t = cumulants_to_moments(r_evolve_wishart(r0, problem.lambda, t));
        out.wishart = s_identity_wishart(s_of(tau_t), s_of(tau0), problem.lambda, t);
        break;
      }
      case Family::chiral: {
        const MomentSequence tau_t = cumulants_to_moments(r_evolve_chiral(r0, problem.lambda, t));
        const STransformSeries s_t = s_of(tau_t);
        const STransformSeries s_0 = s_of(tau0);
        out.chiral = s_identity_chiral(s_t, s_0, problem.lambda, t);
        if (problem.lambda == 1.0) out.dyson = s_identity_dyson(s_t, s_0, t);
        MomentSequence tau_m0;
        for (int n = 1; n <= order + 1; ++n) tau_m0.values.push_back(tau0[2 * n]);
        const CumulantSequence rm_t = r_evolve_wishart(moments_to_cumulants(tau_m0), problem.lambda, t);
        out.multiplicative = s_identity_multiplicative(s_t, s_from_moments(cumulants_to_moments(rm_t), order));
        break;
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::s_undefined && e.code() != ErrorCode::degenerate_measure) throw;
    out.skipped.emplace_back(e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Explicit solutions

ExplicitSolution explicit_wa(double a, double t, int order) {
  if (!(a > 0.0) || !(t >= 0.0)) throw Error(ErrorCode::invalid_parameter, "explicit_wa needs a > 0, t >= 0");
  const int k = order;
  const TruncatedSeries z2 = z_power(2, k);
  const TruncatedSeries r = 0.5 * ((2.0 * t) * z2 - 1.0 + sqrt_series(one(k) + (4.0 * a * a) * z2));
  ExplicitSolution out{CumulantSequence::from_series(r), {}};
  if (t == 0.0) {
    out.s = {-1, (1.0 / a) * sqrt_series(z_power(1, k) + 1.0), SBranch::symmetric_plus};
    return out;
  }
  const double c = 1.0 + a * a / t;
  const double kk = (4.0 * a * a / t) / (c * c);
  const TruncatedSeries root = sqrt_series(one(k + 1) + kk * z_power(1, k + 1));
  const TruncatedSeries bracket = one(k) + (0.5 * c) * divide_by_z(one(k + 1) - root);
  out.s = {-1, (1.0 / std::sqrt(t)) * sqrt_series(bracket), SBranch::symmetric_plus};
  return out;
}

ExplicitSolution explicit_ma(double lambda, double b, double t, int order) {
  if (!(lambda >= 0.0) || !(b > 0.0) || !(t >= 0.0)) {
    throw Error(ErrorCode::invalid_parameter, "explicit_ma needs lambda >= 0, b > 0, t >= 0");
  }
  const int k = order;
  const TruncatedSeries z = z_power(1, k);
  const TruncatedSeries den = one(k) - t * z;
  const TruncatedSeries r = z * ((lambda * t + b) - (lambda * t * t) * z) / (den * den);
  ExplicitSolution out{CumulantSequence::from_series(r), {}};
  if (t == 0.0) {
    out.s = {0, TruncatedSeries::constant(1.0 / b, k), SBranch::standard};
    return out;
  }
  const double c = lambda + b / t;
  const double kk = (4.0 * b / t) / (c * c);
  const TruncatedSeries root = sqrt_series(one(k + 2) + kk * z_power(1, k + 2));
  const TruncatedSeries bracket = one(k + 1) + (0.5 * c) * divide_by_z(one(k + 2) - root);
  if (lambda == 0.0) {
    // The bracket vanishes at 0 and absorbs the 1/z of 1/(t z).
    out.s = {0, (1.0 / t) * divide_by_z(bracket), SBranch::standard};
  } else {
    out.s = {0, bracket.truncated(k) * reciprocal(t * (z + lambda)), SBranch::standard};
  }
  return out;
}

}  // namespace freeburgers
