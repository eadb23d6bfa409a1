#include <cmath>
#include <numeric>

#include "doctest.h"
#include "freeburgers/error.hpp"
#include "freeburgers/sde.hpp"

using namespace freeburgers;

namespace {

double mean_of(const MeasureSpec& mu, int power) {
  double acc = 0.0;
  for (const Atom& a : mu.atoms()) acc += a.weight * std::pow(a.location, power);
  return acc;
}

}  // namespace

TEST_CASE("step / deterministic drift for two dyson particles") {
  SdeConfig c;
  c.family = SdeFamily::dyson;
  c.beta = 2.0;
  c.particles = 2;
  c.dt = 0.01;
  c.initial_positions = {-1.0, 1.0};
  c.noise_scale = 0.0;
  Ensemble e = make_ensemble(c);
  step(c, e);
  CHECK(e.positions[0][0] == doctest::Approx(-(1.0 + c.dt / 2)).epsilon(1e-14));
  CHECK(e.positions[0][1] == doctest::Approx(1.0 + c.dt / 2).epsilon(1e-14));
  CHECK(e.time == doctest::Approx(0.01));
}

TEST_CASE("step / a single dyson particle is brownian") {
  SdeConfig c;
  c.particles = 1;
  c.replicas = 4000;
  c.dt = 0.05;
  c.horizon = 1.0;
  c.seed = 11;
  const Ensemble e = simulate(c);
  const MeasureSpec mu = empirical_measure(e, false);
  CHECK(std::abs(mean_of(mu, 1)) < 0.05);
  CHECK(mean_of(mu, 2) == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("empirical_measure / pooled atoms") {
  Ensemble e;
  e.positions = {{-1.0, 1.0}};
  const MeasureSpec mu = empirical_measure(e, false);
  REQUIRE(mu.atoms().size() == 2);
  CHECK(mu.atoms()[0].location == -1.0);
  CHECK(mu.atoms()[0].weight == doctest::Approx(0.5));
  CHECK(mu.atoms()[1].weight == doctest::Approx(0.5));

  Ensemble s;
  s.positions = {{0.5, 2.0}};
  const MeasureSpec sym = empirical_measure(s, true);
  CHECK(sym.domain() == DomainTag::symmetric);
  CHECK(sym.atoms().size() == 4);
  CHECK(sym.atom_at(-2.0) == doctest::Approx(0.25));
}

TEST_CASE("ks_distance / trivial cases") {
  CHECK(ks_distance(make_semicircle(1.0), make_semicircle(1.0)) == 0.0);
  CHECK(ks_distance(make_dirac(0.0), make_dirac(1.0)) == doctest::Approx(1.0));
  CHECK(ks_distance(make_dirac(0.0), make_bernoulli(1.0)) == doctest::Approx(0.5));
  const double d = ks_distance(make_dirac(0.0), make_semicircle(1.0));
  CHECK(d == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("simulate / dyson from the origin spreads like the semicircle") {
  SdeConfig c;
  c.particles = 64;
  c.replicas = 8;
  c.dt = 2e-3;
  c.horizon = 1.0;
  c.seed = 3;
  const Ensemble e = simulate(c);
  for (const auto& replica : e.positions) CHECK(std::is_sorted(replica.begin(), replica.end()));
  const MeasureSpec mu = hydrodynamic_measure(c, e);
  CHECK(std::abs(mean_of(mu, 1)) < 0.05);
  CHECK(mean_of(mu, 2) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(ks_distance(mu, make_semicircle(1.0)) < 0.1);
}

TEST_CASE("simulate / bru_wishart mean is lambda t") {
  for (double lambda : {0.5, 1.0, 1.5}) {
    const SdeConfig c = wishart_config(SdeFamily::bru_wishart, lambda, 48, 2.0, 2e-3, 1.0, 6, 5);
    const Ensemble e = simulate(c);
    for (const auto& replica : e.positions) CHECK(replica.front() >= 0.0);
    const MeasureSpec mu = hydrodynamic_measure(c, e);
    CHECK(c.lambda() == doctest::Approx(lambda));
    CHECK(mean_of(mu, 1) == doctest::Approx(lambda).epsilon(0.1));
    if (lambda < 1.0) CHECK(mu.atom_at(0.0) == doctest::Approx(1.0 - lambda).epsilon(1e-12));
  }
}

TEST_CASE("simulate / chiral positions track square roots of wishart positions") {
  SdeConfig w;
  w.family = SdeFamily::bru_wishart;
  w.particles = 3;
  w.nu = 0.5;
  w.dt = 1e-5;
  w.horizon = 0.02;
  w.seed = 9;
  w.initial_positions = {1.0, 4.0, 9.0};
  SdeConfig s = w;
  s.family = SdeFamily::chiral;
  s.initial_positions = {1.0, 2.0, 3.0};
  const Ensemble ew = simulate(w);
  const Ensemble es = simulate(s);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::sqrt(ew.positions[0][i]) == doctest::Approx(es.positions[0][i]).epsilon(1e-3));
  }
}

TEST_CASE("simulate / identical seeds reproduce, different seeds differ") {
  SdeConfig c;
  c.particles = 8;
  c.replicas = 3;
  c.dt = 1e-2;
  c.seed = 42;
  const Ensemble a = simulate(c);
  const Ensemble b = simulate(c);
  CHECK(a.positions == b.positions);
  c.seed = 43;
  CHECK(simulate(c).positions != a.positions);
}

TEST_CASE("simulate / dyson mean drift is pure noise") {
  SdeConfig c;
  c.particles = 16;
  c.replicas = 200;
  c.dt = 5e-3;
  c.seed = 17;
  c.initial_positions.resize(16);
  std::iota(c.initial_positions.begin(), c.initial_positions.end(), -7.5);
  const Ensemble e = simulate(c);
  double sum = 0.0, sq = 0.0;
  for (const auto& replica : e.positions) {
    const double m = std::accumulate(replica.begin(), replica.end(), 0.0) / replica.size();
    sum += m;
    sq += m * m;
  }
  const double mean = sum / c.replicas;
  const double se = std::sqrt((sq / c.replicas - mean * mean) / c.replicas);
  CHECK(std::abs(mean) < 3.0 * se + 1e-12);
}

TEST_CASE("SdeConfig / validation") {
  SdeConfig c;
  c.family = SdeFamily::bru_wishart;
  c.nu = -1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c.nu = 0.0;
  c.particles = 2;
  c.initial_positions = {-1.0, 1.0};
  CHECK_THROWS_AS(c.validate(), Error);
  c.initial_positions = {1.0};
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK_THROWS_AS(wishart_config(SdeFamily::dyson, 1.0, 4, 2.0, 1e-3, 1.0, 1, 0), Error);
  CHECK(parse_sde_family("wishart") == SdeFamily::bru_wishart);
  CHECK_THROWS_AS(parse_sde_family("bogus"), Error);
}
