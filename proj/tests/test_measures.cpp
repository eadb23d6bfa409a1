#include <cmath>
#include <numbers>

#include "doctest.h"
#include "freeburgers/error.hpp"
#include "freeburgers/measures.hpp"

using namespace freeburgers;

namespace {

double catalan(int k) {
  double c = 1.0;
  for (int i = 0; i < k; ++i) c = c * 2.0 * (2 * i + 1) / (i + 2);
  return c;
}

// Narayana-polynomial moments of the Marcenko-Pastur law.
double mp_moment(int n, double lambda, double t) {
  double acc = 0.0;
  for (int k = 1; k <= n; ++k) {
    double nar = std::tgamma(n + 1) * std::tgamma(n + 1) /
                 (n * std::tgamma(k + 1) * std::tgamma(k) * std::tgamma(n - k + 1) * std::tgamma(n - k + 2));
    acc += nar * std::pow(lambda, k);
  }
  return acc * std::pow(t, n);
}

}  // namespace

TEST_CASE("dirac and bernoulli") {
  auto d0 = make_dirac(0.0);
  REQUIRE(d0.atoms().size() == 1);
  CHECK(d0.atoms()[0].weight == 1.0);
  CHECK(d0.domain() == DomainTag::nonneg_halfline);

  auto tau = moments(make_dirac(0.7), 6);
  for (int n = 1; n <= 6; ++n) CHECK(tau[n] == doctest::Approx(std::pow(0.7, n)).epsilon(1e-14));

  auto ber = moments(make_bernoulli(1.0), 6);
  for (int n = 1; n <= 6; ++n) CHECK(ber[n] == doctest::Approx(n % 2 == 0 ? 1.0 : 0.0));
  CHECK_THROWS_AS(make_bernoulli(0.0), Error);
  CHECK(make_bernoulli(2.0).domain() == DomainTag::symmetric);
}

TEST_CASE("semicircle") {
  auto w = make_semicircle(1.0);
  CHECK(w.density_at(0.0) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-14));
  CHECK(std::abs(w.mass() - 1.0) < 1e-9);
  auto tau = moments(w, 12);
  for (int n = 1; n <= 12; ++n) {
    const double expected = n % 2 ? 0.0 : catalan(n / 2);
    CHECK(std::abs(tau[n] - expected) < 1e-10);
  }
  const double t = 2.5;
  auto tau_t = moments(make_semicircle(t), 8);
  for (int k = 1; k <= 4; ++k) CHECK(tau_t[2 * k] == doctest::Approx(catalan(k) * std::pow(t, k)).epsilon(1e-11));
  CHECK_THROWS_AS(make_semicircle(0.0), Error);
}

TEST_CASE("marcenko_pastur") {
  auto half = make_marcenko_pastur(0.5, 1.0);
  CHECK(half.atom_at(0.0) == doctest::Approx(0.5));
  CHECK(std::abs(half.mass() - 1.0) < 1e-9);

  auto one = make_marcenko_pastur(1.0, 1.0);
  CHECK(one.atoms().empty());
  CHECK(one.support().first == 0.0);
  CHECK(one.support().second == doctest::Approx(4.0));
  auto tau = moments(one, 3);
  CHECK(tau[1] == doctest::Approx(1).epsilon(1e-10));
  CHECK(tau[2] == doctest::Approx(2).epsilon(1e-10));
  CHECK(tau[3] == doctest::Approx(5).epsilon(1e-10));

  for (double lambda : {0.5, 1.0, 1.5, 3.0}) {
    for (double t : {0.8, 1.0}) {
      auto m = make_marcenko_pastur(lambda, t);
      CHECK(std::abs(m.mass() - 1.0) < 1e-9);
      auto mt = moments(m, 8);
      for (int n = 1; n <= 8; ++n) {
        CAPTURE(lambda);
        CAPTURE(n);
        CHECK(mt[n] == doctest::Approx(mp_moment(n, lambda, t)).epsilon(1e-10));
      }
    }
  }
  CHECK_THROWS_AS(make_marcenko_pastur(-1.0, 1.0), Error);
  CHECK_THROWS_AS(make_marcenko_pastur(1.0, 0.0), Error);
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(MeasureSpec::create({{0.0, 0.5}}, std::nullopt, DomainTag::real_line), Error);
  CHECK_THROWS_AS(MeasureSpec::create({{-1.0, 1.0}}, std::nullopt, DomainTag::nonneg_halfline), Error);
  CHECK_THROWS_AS(MeasureSpec::create({{-1.0, 0.3}, {1.0, 0.7}}, std::nullopt, DomainTag::symmetric), Error);
  auto merged = MeasureSpec::create({{1.0, 0.5}, {1.0 + 1e-13, 0.5}}, std::nullopt, DomainTag::real_line);
  CHECK(merged.atoms().size() == 1);
}

TEST_CASE("push_forward_square") {
  auto p = push_forward_square(make_bernoulli(1.5));
  REQUIRE(p.atoms().size() == 1);
  CHECK(p.atoms()[0].location == doctest::Approx(2.25));
  CHECK(p.atoms()[0].weight == doctest::Approx(1.0));
  CHECK(p.domain() == DomainTag::nonneg_halfline);

  auto z = push_forward_square(make_dirac(0.0));
  CHECK(z.atom_at(0.0) == 1.0);

  const double t = 1.3;
  auto sq = push_forward_square(make_semicircle(t));
  auto mp = make_marcenko_pastur(1.0, t);
  double worst = 0.0;
  for (int i = 1; i < 400; ++i) {
    const double y = 4.0 * t * i / 400.0;
    worst = std::max(worst, std::abs(sq.density_at(y) - mp.density_at(y)));
  }
  CHECK(worst < 1e-6);
  const auto& g1 = *sq.density();
  const auto& g2 = *mp.density();
  REQUIRE(g1.size() == g2.size());
  double grid_worst = 0.0;
  for (int i = 1; i + 1 < g1.size(); ++i) grid_worst = std::max(grid_worst, std::abs(g1.values[i] - g2.values[i]));
  CHECK(grid_worst < 1e-6);
  auto ts = moments(sq, 6);
  auto tm = moments(mp, 6);
  for (int n = 1; n <= 6; ++n) CHECK(ts[n] == doctest::Approx(tm[n]).epsilon(1e-10));
}

TEST_CASE("symmetrize") {
  auto d = symmetrize(make_dirac(4.0));
  REQUIRE(d.atoms().size() == 2);
  CHECK(d.atoms()[0].location == doctest::Approx(-2.0));
  CHECK(d.atoms()[1].weight == doctest::Approx(0.5));
  CHECK(symmetrize(make_dirac(0.0)).atom_at(0.0) == 1.0);
  CHECK_THROWS_AS(symmetrize(make_semicircle(1.0)), Error);

  const double t = 0.9;
  auto s = symmetrize(make_marcenko_pastur(1.0, t));
  auto w = make_semicircle(t);
  CHECK(s.domain() == DomainTag::symmetric);
  double worst = 0.0;
  for (int i = -199; i < 200; ++i) {
    const double x = 2.0 * std::sqrt(t) * i / 200.0;
    worst = std::max(worst, std::abs(s.density_at(x) - w.density_at(x)));
  }
  CHECK(worst < 1e-6);

  for (double lambda : {0.5, 1.5}) {
    auto nu = make_marcenko_pastur(lambda, 1.0);
    auto mu = symmetrize(nu);
    auto tm = moments(mu, 12);
    auto tn = moments(nu, 6);
    for (int n = 1; n <= 6; ++n) {
      CHECK(std::abs(tm[2 * n] - tn[n]) < 1e-8);
      CHECK(std::abs(tm[2 * n - 1]) < 1e-8);
    }
    auto back = push_forward_square(mu);
    CHECK(back.atom_at(0.0) == doctest::Approx(nu.atom_at(0.0)).epsilon(1e-10));
    double dworst = 0.0;
    for (int i = 1; i < 300; ++i) {
      const double y = nu.support().second * i / 300.0;
      dworst = std::max(dworst, std::abs(back.density_at(y) - nu.density_at(y)));
    }
    CHECK(dworst < 1e-6);
  }
}

TEST_CASE("grid-only measures") {
  // A triangle density on [0, 2] described only by its grid.
  DensityGrid g{0.0, 2.0, {}};
  const int n = 2001;
  for (int i = 0; i < n; ++i) {
    const double x = 2.0 * i / (n - 1);
    g.values.push_back(1.0 - std::abs(x - 1.0));
  }
  auto mu = MeasureSpec::create({}, g, DomainTag::nonneg_halfline);
  auto tau = moments(mu, 2);
  CHECK(tau[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(tau[2] == doctest::Approx(7.0 / 6.0).epsilon(1e-6));
  CHECK(mu.cdf(1.0) == doctest::Approx(0.5).epsilon(1e-12));

  // Cauchy transform of a piecewise-linear density is exact.
  const std::complex<double> z(1.0, 0.3);
  auto G = mu.density_cauchy(z);
  // Closed form for the triangle: (z log z - 2(z-1) log(z-1) + (z-2) log(z-2)) with principal logs.
  auto L = [](std::complex<double> w) { return w * std::log(w); };
  const std::complex<double> exact = L(z) - 2.0 * L(z - 1.0) + L(z - 2.0);
  CHECK(std::abs(G - exact) < 1e-10);
  const std::complex<double> far(30.0, 5.0);
  CHECK(std::abs(mu.density_cauchy(far) - (L(far) - 2.0 * L(far - 1.0) + L(far - 2.0))) < 1e-11);

  auto sym = symmetrize(mu);
  auto ts = moments(sym, 4);
  CHECK(std::abs(ts[1]) < 1e-12);
  CHECK(ts[2] == doctest::Approx(1.0).epsilon(1e-5));
}

