#include <cmath>
#include <random>

#include "doctest.h"
#include "freeburgers/error.hpp"
#include "freeburgers/series.hpp"

using namespace freeburgers;

namespace {

void check_coeffs(const TruncatedSeries& s, std::initializer_list<double> expected, double tol = 1e-12) {
  int n = 0;
  for (double e : expected) {
    CAPTURE(n);
    CHECK(std::abs(s.coeff(n) - e) <= tol);
    ++n;
  }
}

TruncatedSeries random_series(std::mt19937_64& rng, int order, double c0, double c1) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TruncatedSeries s(order);
  // Geometric decay keeps the coefficients of compositions and inverses of order one.
  for (int n = 0; n <= order; ++n) s[n] = u(rng) * std::pow(0.5, n);
  s[0] = c0;
  if (order >= 1) s[1] = c1;
  return s;
}

}  // namespace

TEST_CASE("compose") {
  SUBCASE("z/(1-z) under identity") {
    TruncatedSeries g = multiply_by_z(reciprocal(TruncatedSeries{1.0, -1.0, 0.0, 0.0}));
    check_coeffs(compose(TruncatedSeries::identity(3), g), {0, 1, 1, 1});
  }
  SUBCASE("f after z is f") {
    TruncatedSeries f{0.3, -1.2, 2.5, 0.7};
    check_coeffs(compose(f, TruncatedSeries::identity(3)), {0.3, -1.2, 2.5, 0.7});
  }
  SUBCASE("z^2 after 2z") {
    check_coeffs(compose(TruncatedSeries::monomial(1.0, 2, 4), TruncatedSeries::monomial(2.0, 1, 4)),
                 {0, 0, 4, 0, 0});
  }
  SUBCASE("nonzero constant term") {
    CHECK_THROWS_AS(compose(TruncatedSeries{1, 1}, TruncatedSeries{0.5, 1}), Error);
  }
  SUBCASE("associativity") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
      auto f = random_series(rng, 10, 0.4, 0.9);
      auto g = random_series(rng, 10, 0.0, 1.1);
      auto h = random_series(rng, 10, 0.0, -0.8);
      CHECK(max_abs_diff(compose(compose(f, g), h), compose(f, compose(g, h))) < 1e-12);
    }
  }
}

TEST_CASE("lagrange_invert") {
  SUBCASE("bz/(1-bz)") {
    const double b = 0.5;
    TruncatedSeries f = multiply_by_z(b * reciprocal(TruncatedSeries{1.0, -b, 0.0, 0.0}));
    check_coeffs(lagrange_invert(f), {0, 2, -2, 2});
  }
  SUBCASE("identity") { check_coeffs(lagrange_invert(TruncatedSeries::identity(5)), {0, 1, 0, 0, 0, 0}); }
  SUBCASE("round trip") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      auto f = random_series(rng, 12, 0.0, 1.0);
      auto g = lagrange_invert(f);
      CHECK(max_abs_diff(compose(f, g), TruncatedSeries::identity(12)) < 1e-12);
      CHECK(max_abs_diff(compose(g, f), TruncatedSeries::identity(12)) < 1e-12);
      CHECK(max_abs_diff(lagrange_invert(g), f) < 1e-12);
    }
  }
  SUBCASE("zero linear term") {
    try {
      lagrange_invert(TruncatedSeries{0, 0, 1});
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::not_invertible);
    }
  }
}

TEST_CASE("sqrt_series") {
  check_coeffs(sqrt_series(TruncatedSeries{1, 2, 1}), {1, 1, 0});
  check_coeffs(sqrt_series(TruncatedSeries{1, 0, 4, 0, 0, 0, 0}), {1, 0, 2, 0, -2, 0, 4});
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = random_series(rng, 16, 0.5 + trial * 0.1, 0.3);
    auto g = sqrt_series(f);
    CHECK(max_abs_diff(g * g, f) < 1e-14 * 1e2);
  }
  try {
    sqrt_series(TruncatedSeries{0, 1});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::branch_undefined);
  }
}

TEST_CASE("exact on low-degree polynomials") {
  TruncatedSeries a{1, 2, 0, -1, 0};
  TruncatedSeries b{0, 1, 3, 0, 0};
  // (1 + 2z - z^3)(z + 3z^2) = z + 5z^2 + 6z^3 - z^4 + O(z^5)
  check_coeffs(a * b, {0, 1, 5, 6, -1}, 0);
  // a(b) = 1 + 2b - b^3, b^3 = z^3 + 9z^4 + ...
  check_coeffs(compose(a, b), {1, 2, 6, -1, -9}, 0);
}

TEST_CASE("moments_to_cumulants") {
  SUBCASE("low-order relations on random moments") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
      MomentSequence tau{{u(rng), u(rng), u(rng), u(rng)}};
      auto k = moments_to_cumulants(tau);
      const double t1 = tau[1], t2 = tau[2], t3 = tau[3], t4 = tau[4];
      CHECK(k[1] == doctest::Approx(t1).epsilon(1e-12));
      CHECK(std::abs(k[2] - (t2 - t1 * t1)) < 1e-12);
      CHECK(std::abs(k[3] - (t3 - 3 * t1 * t2 + 2 * t1 * t1 * t1)) < 1e-12);
      const double k4 = t4 - 4 * t1 * t3 - 2 * t2 * t2 + 10 * t1 * t1 * t2 - 5 * std::pow(t1, 4);
      CHECK(std::abs(k[4] - k4) < 1e-11);
    }
  }
  SUBCASE("point mass has a single cumulant") {
    const double b = 0.7;
    auto k = moments_to_cumulants(MomentSequence{{b, b * b, b * b * b, std::pow(b, 4)}});
    CHECK(k[1] == doctest::Approx(b));
    CHECK(std::abs(k[2]) < 1e-15);
    CHECK(std::abs(k[3]) < 1e-15);
    CHECK(std::abs(k[4]) < 1e-15);
  }
  SUBCASE("semicircle moments") {
    const double t = 1.3;
    auto k = moments_to_cumulants(MomentSequence{{0, t, 0, 2 * t * t}});
    CHECK(std::abs(k[1]) < 1e-15);
    CHECK(k[2] == doctest::Approx(t));
    CHECK(std::abs(k[3]) < 1e-15);
    CHECK(std::abs(k[4]) < 1e-14);
  }
}

TEST_CASE("cumulants_to_moments") {
  auto catalan = cumulants_to_moments(CumulantSequence{{0, 1, 0, 0, 0, 0}});
  const double expected[] = {0, 1, 0, 2, 0, 5};
  for (int n = 1; n <= 6; ++n) CHECK(catalan[n] == doctest::Approx(expected[n - 1]));

  auto mp = cumulants_to_moments(CumulantSequence{{1, 1, 1}});
  CHECK(mp[1] == doctest::Approx(1));
  CHECK(mp[2] == doctest::Approx(2));
  CHECK(mp[3] == doctest::Approx(5));

  const double b = -0.4;
  auto dirac = cumulants_to_moments(CumulantSequence{{b, 0, 0}});
  CHECK(dirac[3] == doctest::Approx(b * b * b));

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    CumulantSequence k;
    for (int n = 0; n < 16; ++n) k.values.push_back(u(rng) * std::pow(0.5, n));
    auto back = moments_to_cumulants(cumulants_to_moments(k));
    for (int n = 1; n <= 16; ++n) CHECK(std::abs(back[n] - k[n]) < 1e-10);
  }
}
