// Acceptance suite: one PASS/FAIL line per criterion. Pass a criterion number
// (1-11) to run only that one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "freeburgers/evolution.hpp"
#include "freeburgers/sde.hpp"

using namespace freeburgers;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  // Records "label value (<= bound)" and folds the comparison into pass.
  void bound(const char* label, double value, double limit) {
    const bool ok = std::isfinite(value) && value <= limit;
    pass = pass && ok;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s%s %.3g%s%.3g", detail.empty() ? "" : "; ", label, value, ok ? " <= " : " > ",
                  limit);
    detail += buf;
  }
};

std::vector<double> probe_xs(double lo, double hi, int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(lo + (hi - lo) * i / (n - 1));
  return xs;
}

CumulantSequence cumulants_of(const MeasureSpec& mu, int order) {
  return moments_to_cumulants(moments(mu, order));
}

EvolutionResult evolve_default(Family family, double lambda, const CauchyField& field, const MeasureSpec& mu,
                               double t, int points = 4096) {
  const EvolutionProblem p = EvolutionProblem::create(family, lambda, field, mu);
  return evolve(p, t, default_x_grid(p, t, points));
}

Outcome c1_dyson_fundamental() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (double t : {0.5, 1.0, 2.0}) {
    const CauchyField exact = semicircle_field(t);
    for (double x : probe_xs(-5.0, 5.0, 100)) {
      const cplx z(x, 0.5);
      worst = std::max(worst, std::abs(solve_dyson_point(dirac_field(0.0), t, z) - exact(z)));
    }
  }
  o.bound("max |G - G_exact|", worst, 1e-8);
  o.bound("seconds", seconds_since(t0), 10.0);
  return o;
}

Outcome c2_wishart_fundamental() {
  Outcome o;
  double worst = 0.0;
  for (double lambda : {0.5, 1.0, 1.5}) {
    for (double t : {0.5, 1.0}) {
      const CauchyField exact = marcenko_pastur_field(lambda, t);
      for (double x : probe_xs(-5.0, 5.0, 100)) {
        const cplx z(x, 0.5);
        worst = std::max(worst, std::abs(solve_wishart_point(dirac_field(0.0), lambda, t, z) - exact(z)));
      }
    }
  }
  o.bound("max |G - G_exact|", worst, 1e-8);
  return o;
}

// Free cumulants of the Dyson flow from d_a, as displayed for the Bernoulli start.
double kappa_wa(int n, double a, double t) {
  if (n == 2) return t + a * a;
  if (n % 2 || n < 4) return 0.0;
  const int h = n / 2;
  double dfact = 1.0;
  for (int k = n - 3; k > 1; k -= 2) dfact *= k;
  return -std::pow(-1.0, h) * dfact / std::tgamma(h + 1) * std::pow(2.0, h - 1) * std::pow(a, n);
}

Outcome c3_bernoulli_cumulants() {
  Outcome o;
  const EvolutionResult r = evolve_default(Family::dyson, 1.0, bernoulli_field(1.0), make_bernoulli(1.0), 1.0);
  const CumulantSequence k = cumulants_of(r.recovered, 6);
  const double expected[] = {0, 2, 0, -1, 0, 2};
  double low = 0.0;
  for (int n = 1; n <= 4; ++n) {
    low = std::max(low, std::abs(k[n] - expected[n - 1]));
    if (std::abs(kappa_wa(n, 1.0, 1.0) - expected[n - 1]) > 1e-14) o.pass = false;
  }
  o.bound("max n<=4 error", low, 1e-3);
  o.bound("n=6 error", std::abs(k[6] - expected[5]), 5e-3);
  return o;
}

Outcome c4_wishart_from_dirac() {
  Outcome o;
  const double lambda = 1.5, b = 0.7, t = 0.8;
  CumulantSequence r0{std::vector<double>(8, 0.0)};
  r0.values[0] = b;
  const CumulantSequence rt = r_evolve_wishart(r0, lambda, t);
  double series = 0.0;
  for (int n = 1; n <= 8; ++n) series = std::max(series, std::abs(rt[n] - (lambda * t + b * n) * std::pow(t, n - 1)));
  o.bound("series error n<=8", series, 1e-12);
  const EvolutionResult r = evolve_default(Family::wishart, lambda, dirac_field(b), make_dirac(b), t);
  const CumulantSequence k = cumulants_of(r.recovered, 4);
  double density = 0.0;
  for (int n = 1; n <= 4; ++n) {
    density = std::max(density, std::abs(k[n] - (lambda * t + b * n) * std::pow(t, n - 1)));
  }
  o.bound("density-path error n<=4", density, 1e-3);
  return o;
}

Outcome c5_cumulant_shift() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double t = 0.7;
  double series = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    CumulantSequence r0;
    for (int n = 1; n <= 10; ++n) r0.values.push_back(u(rng) * std::pow(0.8, n));
    const CumulantSequence rt = r_evolve_dyson(r0, t);
    for (int n = 1; n <= 10; ++n) series = std::max(series, std::abs(rt[n] - r0[n] - (n == 2 ? t : 0.0)));
  }
  o.bound("series shift error", series, 1e-12);

  struct Start {
    CauchyField field;
    MeasureSpec mu;
  };
  const Start starts[] = {{dirac_field(0.0), make_dirac(0.0)},
                          {dirac_field(1.0), make_dirac(1.0)},
                          {bernoulli_field(1.0), make_bernoulli(1.0)}};
  double pointwise = 0.0;
  for (const Start& s : starts) {
    const EvolutionResult r = evolve_default(Family::dyson, 1.0, s.field, s.mu, 1.0);
    const CumulantSequence k0 = cumulants_of(s.mu, 4);
    const CumulantSequence kt = cumulants_of(r.recovered, 4);
    for (int n = 1; n <= 4; ++n) pointwise = std::max(pointwise, std::abs(kt[n] - k0[n] - (n == 2 ? 1.0 : 0.0)));
  }
  o.bound("pointwise shift error n<=4", pointwise, 1e-3);
  return o;
}

Outcome c6_chiral_r_identity() {
  Outcome o;
  const int K = 12;
  std::vector<MeasureSpec> initials{make_bernoulli(1.0)};
  for (double l : {0.5, 1.0, 1.5}) initials.push_back(symmetrize(make_marcenko_pastur(l, 1.0)));
  double worst = 0.0, lambda1 = 0.0;
  for (const MeasureSpec& mu : initials) {
    const CumulantSequence r0 = cumulants_of(mu, K);
    for (double lambda : {0.5, 1.0, 1.5}) {
      for (double t : {0.5, 1.0}) {
        worst = std::max(worst, verify_chiral_r_identity(r_evolve_chiral(r0, lambda, t), r0, lambda, t));
      }
    }
    for (double t : {0.5, 1.0}) {
      const CumulantSequence rd = r_evolve_dyson(r0, t);
      double dyson = 0.0;
      for (int n = 1; n <= K; ++n) dyson = std::max(dyson, std::abs(rd[n] - r0[n] - (n == 2 ? t : 0.0)));
      lambda1 = std::max(lambda1, std::abs(verify_chiral_r_identity(rd, r0, 1.0, t) - dyson));
    }
  }
  o.bound("max chiral R residual", worst, 1e-6);
  o.bound("lambda=1 vs dyson residual gap", lambda1, 1e-10);
  return o;
}

Outcome c7_s_identities() {
  Outcome o;
  const int K = 12;
  double worst = 0.0;
  auto take = [&](const std::optional<double>& v) {
    if (!v) {
      o.pass = false;
      return 0.0;
    }
    worst = std::max(worst, *v);
    return *v;
  };
  // (i) Dyson from d_1 at t = 1, series route and closed-form S.
  const auto d1 = EvolutionProblem::create(Family::dyson, 1.0, bernoulli_field(1.0), make_bernoulli(1.0));
  take(verify_s_identities(d1, 1.0, K).dyson);
  worst = std::max(worst, s_identity_dyson(explicit_wa(1.0, 1.0, K).s, s_series(make_bernoulli(1.0), K), 1.0));
  // (ii) Wishart from delta_0.7, lambda = 1.5, t = 0.8.
  const auto mb = EvolutionProblem::create(Family::wishart, 1.5, dirac_field(0.7), make_dirac(0.7));
  take(verify_s_identities(mb, 0.8, K).wishart);
  worst = std::max(worst,
                   s_identity_wishart(explicit_ma(1.5, 0.7, 0.8, K).s, s_series(make_dirac(0.7), K), 1.5, 0.8));
  // (iii) and (iv) on the chiral flow from d_1.
  double reduction = 0.0;
  for (double lambda : {0.5, 1.0, 1.5}) {
    const auto ch = EvolutionProblem::create(Family::chiral, lambda, bernoulli_field(1.0), make_bernoulli(1.0));
    const SIdentityResiduals r = verify_s_identities(ch, 1.0, K);
    take(r.chiral);
    take(r.multiplicative);
    if (lambda == 1.0) reduction = std::abs(take(r.chiral) - take(r.dyson));
  }
  o.bound("max S residual", worst, 1e-8);
  o.bound("lambda=1 chiral vs dyson", reduction, 1e-8);
  return o;
}

Outcome c8_pushforward() {
  Outcome o;
  const int K = 12;
  const std::vector<cplx> probes{{1.0, 1.0}, {-2.0, 0.3}, {0.0, 2.0}, {0.4, 0.05}, {3.0, 0.5}, {-0.7, 1.5}};
  double cauchy = 0.0, r = 0.0, s = 0.0, measure = 0.0;
  auto fold = [&](const PushForwardResiduals& p) {
    cauchy = std::max(cauchy, p.cauchy);
    r = std::max(r, p.r);
    s = std::max(s, p.s);
    measure = std::max(measure, p.measure);
  };
  for (double a : {0.5, 1.0, 1.3}) {
    fold(square_pushforward_residuals(make_bernoulli(a), bernoulli_field(a), make_dirac(a * a), dirac_field(a * a), K,
                                      probes));
  }
  for (double t : {0.5, 1.0}) {
    fold(square_pushforward_residuals(make_semicircle(t), semicircle_field(t), make_marcenko_pastur(1.0, t),
                                      marcenko_pastur_field(1.0, t), K, probes));
  }
  o.bound("G identity", cauchy, 1e-8);
  o.bound("R identity", r, 1e-8);
  o.bound("S identity", s, 1e-8);
  o.bound("moment gap", measure, 1e-6);
  return o;
}

Outcome c9_inversion() {
  Outcome o;
  const EvolutionResult sc = evolve_default(Family::dyson, 1.0, dirac_field(0.0), make_dirac(0.0), 1.0);
  const EvolutionResult mp = evolve_default(Family::wishart, 0.5, dirac_field(0.0), make_dirac(0.0), 1.0);
  o.bound("|raw mass - 1| semicircle", std::abs(sc.diagnostics.raw_mass - 1.0), 1e-2);
  o.bound("|raw mass - 1| mp(0.5)", std::abs(mp.diagnostics.raw_mass - 1.0), 1e-2);
  o.bound("|atom - 0.5|", std::abs(mp.recovered.atom_at(0.0) - 0.5), 0.02);
  o.bound("|rho(0) - 1/pi|", std::abs(sc.recovered.density_at(0.0) - 1.0 / std::numbers::pi), 1e-3);
  return o;
}

struct SdeRun {
  double ks = 0.0;
  double seconds = 0.0;
};

SdeRun run_sde(const SdeConfig& c, const MeasureSpec& target, bool squared) {
  const auto t0 = Clock::now();
  const Ensemble e = simulate(c);
  MeasureSpec mu = hydrodynamic_measure(c, e);
  if (squared) mu = push_forward_square(mu);
  return {ks_distance(mu, target), seconds_since(t0)};
}

Outcome c10_hydrodynamic_limit() {
  Outcome o;
  const int N = 256, M = 20;
  const double dt = 1e-3;
  const MeasureSpec semicircle = make_semicircle(1.0);
  double slowest = 0.0;
  SdeConfig d;
  d.particles = N;
  d.replicas = M;
  d.dt = dt;
  d.horizon = 1.0;
  d.seed = 1;
  d.beta = 2.0;
  const SdeRun b2 = run_sde(d, semicircle, false);
  d.beta = 1.0;
  const SdeRun b1 = run_sde(d, semicircle, false);
  o.bound("dyson KS beta=2", b2.ks, 0.08);
  o.bound("dyson KS beta=1", b1.ks, 0.08);
  o.bound("beta gap", std::abs(b2.ks - b1.ks), 0.05);
  slowest = std::max({slowest, b2.seconds, b1.seconds});
  for (double lambda : {0.5, 1.5}) {
    const SdeRun w = run_sde(wishart_config(SdeFamily::bru_wishart, lambda, N, 2.0, dt, 1.0, M, 2),
                             make_marcenko_pastur(lambda, 1.0), false);
    o.bound(lambda < 1.0 ? "wishart KS lambda=0.5" : "wishart KS lambda=1.5", w.ks, 0.08);
    slowest = std::max(slowest, w.seconds);
  }
  const SdeRun ch = run_sde(wishart_config(SdeFamily::chiral, 1.5, N, 2.0, dt, 1.0, M, 3),
                            make_marcenko_pastur(1.5, 1.0), true);
  o.bound("squared chiral KS", ch.ks, 0.08);
  o.bound("slowest run seconds", std::max(slowest, ch.seconds), 300.0);
  return o;
}

Outcome c11_subordination() {
  Outcome o;
  const EvolutionResult r = evolve_default(Family::dyson, 1.0, bernoulli_field(1.0), make_bernoulli(1.0), 1.0);
  o.bound("subordination residual", r.diagnostics.subordination_residual, 1e-10);
  if (!(r.diagnostics.min_subordination_imag > 0.0)) o.pass = false;
  return o;
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"dyson fundamental solution", c1_dyson_fundamental},
      {"wishart fundamental solution", c2_wishart_fundamental},
      {"dyson from d_1: density cumulants", c3_bernoulli_cumulants},
      {"wishart from delta_b: cumulants", c4_wishart_from_dirac},
      {"dyson cumulant shift", c5_cumulant_shift},
      {"chiral R identity", c6_chiral_r_identity},
      {"S-transform identities", c7_s_identities},
      {"square push-forward equivalences", c8_pushforward},
      {"Stieltjes inversion fidelity", c9_inversion},
      {"particle systems vs hydrodynamic limit", c10_hydrodynamic_limit},
      {"subordination residual", c11_subordination},
  };
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && only != static_cast<int>(i + 1)) continue;
    Outcome out;
    const auto t0 = Clock::now();
    try {
      out = criteria[i].run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("error: ") + e.what();
    }
    failed += !out.pass;
    std::printf("[%s] C%-2zu %-40s %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                out.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed ? 1 : 0;
}
