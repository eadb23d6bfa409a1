#include "freeburgers/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include "CLI11.hpp"
#include "freeburgers/sde.hpp"

namespace freeburgers {

namespace fs = std::filesystem;

namespace {

const std::vector<cplx> kProbePoints{{1.0, 1.0}, {-2.0, 0.3}, {0.0, 2.0}, {0.4, 0.05}, {3.0, 0.5}, {-0.7, 1.5}};

std::vector<double> eps_of(const RunManifest& m) {
  return m.eps_schedule.empty() ? kDefaultEpsSchedule : m.eps_schedule;
}

std::string atom_text(const Atom& a) {
  char buf[64];
  const double x = std::abs(a.location) < 1e-8 ? 0.0 : a.location;
  std::snprintf(buf, sizeof buf, "%.3g @ %.6g", a.weight, x);
  return buf;
}

json rows_to_json(const std::vector<CheckRow>& rows) {
  json out = json::array();
  for (const CheckRow& r : rows) {
    json j{{"name", r.name}, {"tolerance", r.tolerance}, {"passed", r.passed()}};
    j["value"] = r.value ? json(*r.value) : json(nullptr);
    if (!r.note.empty()) j["note"] = r.note;
    out.push_back(std::move(j));
  }
  return out;
}

void log_rows(const std::vector<CheckRow>& rows, std::ostream& log) {
  for (const CheckRow& r : rows) {
    char buf[160];
    if (r.value) {
      std::snprintf(buf, sizeof buf, "%-28s %12.3e  tol %8.1e  %s", r.name.c_str(), *r.value, r.tolerance,
                    r.passed() ? "ok" : "FAIL");
    } else {
      std::snprintf(buf, sizeof buf, "%-28s %12s  tol %8.1e  skipped", r.name.c_str(), "-", r.tolerance);
    }
    log << buf;
    if (!r.note.empty()) log << "  (" << r.note << ")";
    log << '\n';
  }
}

bool all_passed(const std::vector<CheckRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.passed(); });
}

CumulantSequence initial_cumulants(const MeasureSpec& mu, int order) {
  return moments_to_cumulants(moments(mu, order));
}

json diagnostics_json(const EvolutionDiagnostics& d) {
  return {{"max_residual", d.max_residual},
          {"continuation_steps", d.continuation_steps},
          {"failures", d.failures},
          {"branch_flags", d.branch_flags},
          {"raw_mass", d.raw_mass},
          {"subordination_residual", d.subordination_residual},
          {"min_subordination_imag", d.min_subordination_imag}};
}

void prepare(const RunManifest& m, const std::string& hash) {
  fs::create_directories(m.out_dir);
  write_json(fs::path(m.out_dir) / "manifest.json", hash, m.to_json());
}

}  // namespace

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::invalid_parameter:
    case ErrorCode::invalid_domain:
    case ErrorCode::invalid_input:
    case ErrorCode::out_of_domain:
      return exit_invalid_input;
    default:
      return exit_solver_failure;
  }
}

EvolutionProblem problem_from(const RunManifest& m, const InitialCondition& ic) {
  const Family family = parse_family(m.family);
  const bool origin = ic.measure.atoms().size() == 1 && ic.measure.atom_at(0.0) == 1.0;
  if (family == Family::chiral && origin) {
    // delta_0 is symmetric but carries the tag of its constructor.
    return EvolutionProblem::create(family, m.lambda, ic.field,
                                    MeasureSpec::create({{0.0, 1.0}}, std::nullopt, DomainTag::symmetric));
  }
  return EvolutionProblem::create(family, m.lambda, ic.field, ic.measure);
}

CumulantSequence series_cumulants(const EvolutionProblem& problem, const MeasureSpec& initial, double t,
                                  int order) {
  const CumulantSequence r0 = initial_cumulants(initial, order);
  switch (problem.family) {
    case Family::dyson: return r_evolve_dyson(r0, t);
    case Family::wishart: return r_evolve_wishart(r0, problem.lambda, t);
    case Family::chiral: return r_evolve_chiral(r0, problem.lambda, t);
  }
  return r0;
}

int cmd_evolve(const RunManifest& m, std::ostream& log) {
  const InitialCondition ic = parse_initial(m.initial);
  const EvolutionProblem problem = problem_from(m, ic);
  const std::string hash = m.hash();
  prepare(m, hash);
  const fs::path out(m.out_dir);

  const std::vector<double> grid = default_x_grid(problem, m.t, m.grid);
  const std::vector<double> eps = eps_of(m);
  EvolutionResult res;
  try {
    res = evolve(problem, m.t, grid, eps);
  } catch (const EvolutionFailure& e) {
    write_json(out / "diagnostics.json", hash,
               {{"status", "failed"}, {"error", e.what()}, {"diagnostics", diagnostics_json(e.diagnostics())}});
    log << e.what() << '\n';
    return exit_solver_failure;
  } catch (const Error& e) {
    json diag{{"status", "failed"}, {"error", e.what()}};
    if (problem.family != Family::dyson && problem.lambda < 1.0 &&
        problem.initial_measure.atom_at(0.0) < 1.0 - problem.lambda) {
      diag["note"] = "initial atom at 0 is below 1 - lambda; the flow need not stay a probability measure";
      log << "note: " << diag["note"].get<std::string>() << '\n';
    }
    write_json(out / "diagnostics.json", hash, diag);
    log << e.what() << '\n';
    return exit_code_for(e);
  }

  std::vector<std::vector<double>> density;
  for (double x : res.x_grid) density.push_back({x, res.recovered.density_at(x)});
  write_csv(out / "density.csv", hash, {"x", "rho"}, density);

  const CumulantSequence by_series = series_cumulants(problem, ic.measure, m.t, m.order);
  const CumulantSequence by_density = initial_cumulants(res.recovered, m.order);
  std::vector<std::vector<double>> cumulants;
  for (int n = 1; n <= m.order; ++n) {
    cumulants.push_back({double(n), by_series[n], by_density[n], std::abs(by_series[n] - by_density[n])});
  }
  write_csv(out / "cumulants.csv", hash, {"n", "kappa_series", "kappa_density", "abs_diff"}, cumulants);

  json atoms = json::array();
  std::ofstream report(out / "atoms.txt");
  report << "# manifest " << hash << '\n';
  for (const Atom& a : res.recovered.atoms()) {
    atoms.push_back({{"location", a.location}, {"weight", a.weight}});
    report << atom_text(a) << '\n';
    log << "atom " << atom_text(a) << '\n';
  }
  const auto [lo, hi] = res.recovered.support();
  write_json(out / "diagnostics.json", hash,
             {{"status", "ok"},
              {"t", m.t},
              {"atoms", atoms},
              {"support", {lo, hi}},
              {"eps_schedule", eps},
              {"diagnostics", diagnostics_json(res.diagnostics)}});

  log << "max residual " << res.diagnostics.max_residual << ", raw mass " << res.diagnostics.raw_mass << '\n';
  for (const auto& row : cumulants) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "kappa_%-2d series %12.6f  density %12.6f  diff %.2e", int(row[0]), row[1], row[2],
                  row[3]);
    log << buf << '\n';
  }
  return exit_ok;
}

std::vector<CheckRow> verify_rows(const RunManifest& m, const InitialCondition& ic) {
  const EvolutionProblem problem = problem_from(m, ic);
  const int order = m.order;
  const double t = m.t;
  const MeasureSpec& mu = ic.measure;
  const bool symmetric = mu.domain() == DomainTag::symmetric;
  std::vector<CheckRow> rows;

  const CumulantSequence r0 = initial_cumulants(mu, order);
  const CumulantSequence rd = r_evolve_dyson(r0, t);
  double shift = 0.0;
  for (int n = 1; n <= order; ++n) shift = std::max(shift, std::abs(rd[n] - r0[n] - (n == 2 ? t : 0.0)));
  rows.push_back({"dyson_cumulant_shift", shift, 1e-12, ""});

  const SIdentityResiduals s = verify_s_identities(problem, t, order);
  const std::string skipped = s.skipped.empty() ? std::string("not applicable") : s.skipped.front();
  auto s_row = [&](const char* name, const std::optional<double>& v, bool applies) {
    if (v || applies) rows.push_back({name, v, 1e-8, v ? "" : skipped});
  };
  s_row("s_identity_dyson", s.dyson, problem.family == Family::dyson);
  s_row("s_identity_wishart", s.wishart, problem.family == Family::wishart);
  s_row("s_identity_chiral", s.chiral, problem.family == Family::chiral);
  s_row("s_identity_multiplicative", s.multiplicative, problem.family == Family::chiral);

  if (symmetric) {
    const CumulantSequence rc = r_evolve_chiral(r0, m.lambda, t);
    rows.push_back({"chiral_r_identity", verify_chiral_r_identity(rc, r0, m.lambda, t), 1e-6, ""});
    const CumulantSequence rc1 = r_evolve_chiral(r0, 1.0, t);
    double gap = 0.0;
    for (int n = 1; n <= order; ++n) gap = std::max(gap, std::abs(rc1[n] - rd[n]));
    rows.push_back({"chiral_vs_dyson_lambda1", gap, 1e-10, ""});

    const MeasureSpec nu = push_forward_square(mu);
    const bool closed = ic.square_field.has_value();
    const CauchyField nu_field = closed ? *ic.square_field : quadrature_field(nu);
    const PushForwardResiduals p = square_pushforward_residuals(mu, ic.field, nu, nu_field, order, kProbePoints);
    rows.push_back({"pushforward_measure", p.measure, 1e-8, ""});
    rows.push_back({"pushforward_cauchy", p.cauchy, closed ? 1e-8 : 1e-6, closed ? "" : "quadrature field"});
    rows.push_back({"pushforward_r", p.r, 1e-8, ""});
    rows.push_back({"pushforward_s", p.s, 1e-8, ""});
  }
  return rows;
}

int cmd_verify(const RunManifest& m, std::ostream& log) {
  const InitialCondition ic = parse_initial(m.initial);
  const std::string hash = m.hash();
  prepare(m, hash);
  const std::vector<CheckRow> rows = verify_rows(m, ic);
  write_json(fs::path(m.out_dir) / "verify.json", hash, {{"rows", rows_to_json(rows)}, {"passed", all_passed(rows)}});
  log_rows(rows, log);
  return all_passed(rows) ? exit_ok : exit_check_failed;
}

namespace {

SdeFamily sde_family_of(Family f) {
  switch (f) {
    case Family::dyson: return SdeFamily::dyson;
    case Family::wishart: return SdeFamily::bru_wishart;
    case Family::chiral: return SdeFamily::chiral;
  }
  return SdeFamily::dyson;
}

// Quantiles of mu at (i + 1/2) / n.
std::vector<double> quantiles(const MeasureSpec& mu, int n) {
  const auto [lo, hi] = mu.support();
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    const double p = (i + 0.5) / n;
    double a = lo, b = hi;
    for (int it = 0; it < 100 && b - a > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
      const double c = 0.5 * (a + b);
      (mu.cdf(c) < p ? a : b) = c;
    }
    out.push_back(b);
  }
  return out;
}

double moment(const MeasureSpec& mu, int n) { return moments(mu, n)[n]; }

}  // namespace

double simulate_lambda(const RunManifest& m) {
  return m.nu != 0.0 ? 1.0 + m.nu / m.particles : m.lambda;
}

SdeConfig sde_config_from(const RunManifest& m, const InitialCondition& ic) {
  const Family family = parse_family(m.family);
  const bool at_origin = ic.measure.atoms().size() == 1 && ic.measure.atom_at(0.0) == 1.0;
  if (family != Family::dyson) {
    if (!at_origin) throw Error(ErrorCode::invalid_input, "wishart and chiral simulations start from dirac:b=0");
    return wishart_config(sde_family_of(family), simulate_lambda(m), m.particles, m.beta, m.dt, m.t, m.replicas,
                          m.seed);
  }
  SdeConfig config;
  config.family = SdeFamily::dyson;
  config.beta = m.beta;
  config.particles = m.particles;
  config.dt = m.dt;
  config.horizon = m.t;
  config.replicas = m.replicas;
  config.seed = m.seed;
  if (!at_origin) {
    const double scale = hydrodynamic_scale(config);
    config.initial_positions = quantiles(ic.measure, m.particles);
    for (double& x : config.initial_positions) x /= scale;
  }
  config.validate();
  return config;
}

int cmd_simulate(const RunManifest& m, std::ostream& log, bool trajectory) {
  const InitialCondition ic = parse_initial(m.initial);
  const Family family = parse_family(m.family);
  const std::string hash = m.hash();
  const double lambda = family == Family::dyson ? m.lambda : simulate_lambda(m);
  const SdeConfig config = sde_config_from(m, ic);
  prepare(m, hash);
  const fs::path out(m.out_dir);

  std::ofstream traj;
  if (trajectory) {
    traj.open(out / "trajectory.csv");
    traj << "# manifest " << hash << "\nt";
    for (int i = 0; i < config.particles; ++i) traj << ",x" << i;
    traj << '\n';
  }
  auto observer = [&](const Ensemble& e) {
    if (!trajectory) return;
    traj << format_number(e.time);
    for (double x : e.positions[0]) traj << ',' << format_number(x);
    traj << '\n';
  };
  const auto started = std::chrono::steady_clock::now();
  const Ensemble ens = simulate(config, observer);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const MeasureSpec empirical = hydrodynamic_measure(config, ens);

  std::vector<CheckRow> rows;
  if (family == Family::dyson && config.particles == 1) {
    // Plain Brownian motion: compare the sample variance with var0 + t.
    const double var0 = moment(ic.measure, 2) - std::pow(moment(ic.measure, 1), 2);
    const double mean = moment(empirical, 1);
    const double var = moment(empirical, 2) - mean * mean;
    const double expected = var0 + m.t;
    const double se = expected * std::sqrt(2.0 / std::max(1, config.replicas - 1));
    rows.push_back({"brownian_variance_zscore", std::abs(var - expected) / se, 3.0, ""});
  } else {
    RunManifest target_m = m;
    target_m.lambda = lambda;
    const EvolutionProblem problem = problem_from(target_m, ic);
    const EvolutionResult target = evolve(problem, m.t, default_x_grid(problem, m.t, m.grid), eps_of(m));
    rows.push_back({"ks_vs_hydrodynamic", ks_distance(empirical, target.recovered), 0.08, ""});
    if (family == Family::chiral) {
      const EvolutionProblem w = EvolutionProblem::create(Family::wishart, lambda, dirac_field(0.0), make_dirac(0.0));
      const EvolutionResult wt = evolve(w, m.t, default_x_grid(w, m.t, m.grid), eps_of(m));
      rows.push_back({"squared_chiral_vs_wishart", ks_distance(push_forward_square(empirical), wt.recovered), 0.08, ""});
    }
  }

  write_json(out / "summary.json", hash,
             {{"family", to_string(config.family)},
              {"lambda", lambda},
              {"particles", config.particles},
              {"zero_modes", config.zero_modes},
              {"replicas", config.replicas},
              {"seconds", seconds},
              {"mean", moment(empirical, 1)},
              {"second_moment", moment(empirical, 2)},
              {"rows", rows_to_json(rows)},
              {"passed", all_passed(rows)}});
  char buf[96];
  std::snprintf(buf, sizeof buf, "simulated %d x %d particles in %.1f s", config.replicas, config.particles, seconds);
  log << buf << '\n';
  log_rows(rows, log);
  return all_passed(rows) ? exit_ok : exit_check_failed;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Free Burgers flows: evolution, identity checks and particle simulations"};
  app.require_subcommand(1);
  RunManifest m;
  bool trajectory = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--family", m.family, "dyson | wishart | chiral")
        ->check(CLI::IsMember({"dyson", "wishart", "chiral"}));
    sub->add_option("--lambda", m.lambda, "Rectangularity parameter");
    sub->add_option("--t", m.t, "Target time")->check(CLI::NonNegativeNumber);
    sub->add_option("--initial", m.initial, "dirac:b=, bernoulli:a=, semicircle:t=, mp:lambda=,t= or a JSON file");
    sub->add_option("--order", m.order, "Series truncation order K")->check(CLI::PositiveNumber);
    sub->add_option("--grid", m.grid, "Evaluation grid points")->check(CLI::Range(3, 1 << 20));
    sub->add_option("--eps-schedule", m.eps_schedule, "Decreasing imaginary offsets")->delimiter(',');
    sub->add_option("--out", m.out_dir, "Output directory");
    sub->add_option("--seed", m.seed, "RNG seed");
    sub->add_option("--replicas", m.replicas, "Independent replicas M")->check(CLI::PositiveNumber);
    sub->add_option("--particles", m.particles, "Particles per replica N")->check(CLI::PositiveNumber);
    sub->add_option("--dt", m.dt, "SDE step")->check(CLI::PositiveNumber);
    sub->add_option("--beta", m.beta, "Inverse temperature")->check(CLI::PositiveNumber);
    sub->add_option("--nu", m.nu, "Wishart nu; when nonzero sets lambda = 1 + nu / N");
  };
  CLI::App* evolve_cmd = app.add_subcommand("evolve", "Solve the flow and recover the measure at time t");
  CLI::App* verify_cmd = app.add_subcommand("verify", "Residuals of the R, S and push-forward identities");
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Particle simulation against the hydrodynamic limit");
  for (CLI::App* sub : {evolve_cmd, verify_cmd, simulate_cmd}) add_common(sub);
  simulate_cmd->add_flag("--trajectory", trajectory, "Write replica 0 positions after every step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_invalid_input;
  }

  try {
    if (*evolve_cmd) {
      m.command = "evolve";
      return cmd_evolve(m, std::cout);
    }
    if (*verify_cmd) {
      m.command = "verify";
      return cmd_verify(m, std::cout);
    }
    m.command = "simulate";
    return cmd_simulate(m, std::cout, trajectory);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return exit_invalid_input;
  }
}

}  // namespace freeburgers
