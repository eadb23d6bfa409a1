#include "freeburgers/series.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "freeburgers/error.hpp"

namespace freeburgers {

namespace {

double max_abs_coeff(const TruncatedSeries& f) {
  double m = 0.0;
  for (double c : f.coeffs()) m = std::max(m, std::abs(c));
  return m;
}

// Constant terms below this (relative to the largest coefficient) count as zero.
constexpr double kZeroTolerance = 1e-12;

bool negligible_constant(const TruncatedSeries& f) {
  return std::abs(f[0]) <= kZeroTolerance * (1.0 + max_abs_coeff(f));
}

}  // namespace

TruncatedSeries::TruncatedSeries(int order) {
  if (order < 0) throw Error(ErrorCode::invalid_parameter, "series order must be >= 0");
  coeffs_.assign(static_cast<std::size_t>(order) + 1, 0.0);
}

TruncatedSeries::TruncatedSeries(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) coeffs_.push_back(0.0);
}

TruncatedSeries::TruncatedSeries(std::initializer_list<double> coeffs)
    : TruncatedSeries(std::vector<double>(coeffs)) {}

TruncatedSeries TruncatedSeries::constant(double c, int order) {
  TruncatedSeries s(order);
  s[0] = c;
  return s;
}

TruncatedSeries TruncatedSeries::monomial(double c, int power, int order) {
  TruncatedSeries s(order);
  if (power >= 0 && power <= order) s[power] = c;
  return s;
}

TruncatedSeries TruncatedSeries::truncated(int order) const {
  TruncatedSeries s(order);
  for (int n = 0; n <= std::min(order, this->order()); ++n) s[n] = (*this)[n];
  return s;
}

double TruncatedSeries::eval(double z) const {
  double acc = 0.0;
  for (int n = order(); n >= 0; --n) acc = acc * z + (*this)[n];
  return acc;
}

TruncatedSeries& TruncatedSeries::operator+=(const TruncatedSeries& rhs) {
  if (rhs.order() < order()) coeffs_.resize(rhs.coeffs_.size());
  for (int n = 0; n <= order(); ++n) (*this)[n] += rhs[n];
  return *this;
}

TruncatedSeries& TruncatedSeries::operator-=(const TruncatedSeries& rhs) {
  if (rhs.order() < order()) coeffs_.resize(rhs.coeffs_.size());
  for (int n = 0; n <= order(); ++n) (*this)[n] -= rhs[n];
  return *this;
}

TruncatedSeries& TruncatedSeries::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

TruncatedSeries operator*(const TruncatedSeries& a, const TruncatedSeries& b) {
  const int k = std::min(a.order(), b.order());
  TruncatedSeries out(k);
  for (int i = 0; i <= k; ++i) {
    if (a[i] == 0.0) continue;
    for (int j = 0; i + j <= k; ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

TruncatedSeries operator/(const TruncatedSeries& a, const TruncatedSeries& b) {
  return a * reciprocal(b);
}

TruncatedSeries reciprocal(const TruncatedSeries& f) {
  if (f[0] == 0.0) throw Error(ErrorCode::not_invertible, "reciprocal of a series with zero constant term");
  const int k = f.order();
  TruncatedSeries g(k);
  g[0] = 1.0 / f[0];
  for (int n = 1; n <= k; ++n) {
    double acc = 0.0;
    for (int j = 1; j <= n; ++j) acc += f[j] * g[n - j];
    g[n] = -acc / f[0];
  }
  return g;
}

TruncatedSeries compose(const TruncatedSeries& f, const TruncatedSeries& g) {
  if (!negligible_constant(g)) {
    throw Error(ErrorCode::composition_undefined,
                "inner series has nonzero constant term " + std::to_string(g[0]));
  }
  const int k = std::min(f.order(), g.order());
  TruncatedSeries inner = g.truncated(k);
  inner[0] = 0.0;
  TruncatedSeries acc = TruncatedSeries::constant(f.coeff(k), k);
  for (int n = k - 1; n >= 0; --n) {
    acc = acc * inner;
    acc[0] += f[n];
  }
  return acc;
}

TruncatedSeries lagrange_invert(const TruncatedSeries& f) {
  if (!negligible_constant(f)) {
    throw Error(ErrorCode::composition_undefined, "series to invert has nonzero constant term");
  }
  const int k = f.order();
  if (k < 1) throw Error(ErrorCode::invalid_parameter, "inversion needs order >= 1");
  const double c1 = f[1];
  if (std::abs(c1) <= 1e-14 * (1.0 + max_abs_coeff(f))) {
    throw Error(ErrorCode::not_invertible, "linear coefficient vanishes");
  }
  TruncatedSeries g(k);
  g[1] = 1.0 / c1;
  for (int n = 2; n <= k; ++n) {
    // [z^n] f(g) is linear in g_n with slope c1; every other term is already fixed.
    const TruncatedSeries fg = compose(f, g);
    g[n] = -fg[n] / c1;
  }
  return g;
}

TruncatedSeries sqrt_series(const TruncatedSeries& f) {
  if (!(f[0] > 0.0)) {
    throw Error(ErrorCode::branch_undefined,
                "square root needs a positive constant term, got " + std::to_string(f[0]));
  }
  const int k = f.order();
  TruncatedSeries g(k);
  g[0] = std::sqrt(f[0]);
  for (int n = 1; n <= k; ++n) {
    double acc = f[n];
    for (int j = 1; j < n; ++j) acc -= g[j] * g[n - j];
    g[n] = acc / (2.0 * g[0]);
  }
  return g;
}

TruncatedSeries half_power(const TruncatedSeries& f, int half_pow) {
  const int k = f.order();
  TruncatedSeries base = (half_pow % 2 != 0) ? sqrt_series(f) : f;
  if (half_pow % 2 == 0 && !(f[0] > 0.0)) {
    throw Error(ErrorCode::branch_undefined, "power of a series with non-positive constant term");
  }
  int reps = std::abs(half_pow % 2 != 0 ? half_pow : half_pow / 2);
  TruncatedSeries out = TruncatedSeries::constant(1.0, k);
  for (int i = 0; i < reps; ++i) out = out * base;
  return half_pow < 0 ? reciprocal(out) : out;
}

TruncatedSeries divide_by_z(const TruncatedSeries& f) {
  if (!negligible_constant(f)) {
    throw Error(ErrorCode::invalid_input, "division by z of a series with nonzero constant term");
  }
  const int k = std::max(0, f.order() - 1);
  TruncatedSeries out(k);
  for (int n = 0; n <= k && n + 1 <= f.order(); ++n) out[n] = f[n + 1];
  return out;
}

TruncatedSeries multiply_by_z(const TruncatedSeries& f) {
  TruncatedSeries out(f.order());
  for (int n = 1; n <= f.order(); ++n) out[n] = f[n - 1];
  return out;
}

TruncatedSeries even_part_in_square(const TruncatedSeries& f) {
  TruncatedSeries out(f.order() / 2);
  for (int n = 0; 2 * n <= f.order(); ++n) out[n] = f[2 * n];
  return out;
}

TruncatedSeries substitute_square(const TruncatedSeries& h) {
  TruncatedSeries out(2 * h.order());
  for (int n = 0; n <= h.order(); ++n) out[2 * n] = h[n];
  return out;
}

double max_abs_diff(const TruncatedSeries& a, const TruncatedSeries& b) {
  const int k = std::min(a.order(), b.order());
  double m = 0.0;
  for (int n = 0; n <= k; ++n) m = std::max(m, std::abs(a[n] - b[n]));
  return m;
}

TruncatedSeries MomentSequence::as_series() const {
  TruncatedSeries s(order());
  for (int n = 1; n <= order(); ++n) s[n] = (*this)[n];
  return s;
}

TruncatedSeries CumulantSequence::as_series() const {
  TruncatedSeries s(order());
  for (int n = 1; n <= order(); ++n) s[n] = (*this)[n];
  return s;
}

CumulantSequence CumulantSequence::from_series(const TruncatedSeries& r) {
  CumulantSequence out;
  out.values.assign(r.coeffs().begin() + 1, r.coeffs().end());
  return out;
}

namespace {

// [z^{n-k}] M(z)^k for k = 1..n, where only M_0..M_{n-1} are used.
std::vector<double> power_coefficients(const TruncatedSeries& m, int n) {
  std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
  TruncatedSeries pow = TruncatedSeries::constant(1.0, n);
  TruncatedSeries base = m.truncated(n);
  base[n] = 0.0;
  for (int k = 1; k <= n; ++k) {
    pow = pow * base;
    out[static_cast<std::size_t>(k)] = pow[n - k];
  }
  return out;
}

}  // namespace

CumulantSequence moments_to_cumulants(const MomentSequence& tau) {
  const int k = tau.order();
  if (k < 1) throw Error(ErrorCode::invalid_parameter, "moment order must be >= 1");
  TruncatedSeries m = 1.0 + tau.as_series();
  CumulantSequence kappa;
  kappa.values.assign(static_cast<std::size_t>(k), 0.0);
  for (int n = 1; n <= k; ++n) {
    const auto p = power_coefficients(m, n);
    double acc = tau[n];
    for (int j = 1; j < n; ++j) acc -= kappa[j] * p[static_cast<std::size_t>(j)];
    kappa.values[static_cast<std::size_t>(n - 1)] = acc;  // p[n] == 1
  }
  return kappa;
}

MomentSequence cumulants_to_moments(const CumulantSequence& kappa) {
  const int k = kappa.order();
  if (k < 1) throw Error(ErrorCode::invalid_parameter, "cumulant order must be >= 1");
  TruncatedSeries m = TruncatedSeries::constant(1.0, k);
  MomentSequence tau;
  tau.values.assign(static_cast<std::size_t>(k), 0.0);
  for (int n = 1; n <= k; ++n) {
    const auto p = power_coefficients(m, n);
    double acc = 0.0;
    for (int j = 1; j <= n; ++j) acc += kappa[j] * p[static_cast<std::size_t>(j)];
    tau.values[static_cast<std::size_t>(n - 1)] = acc;
    m[n] = acc;
  }
  return tau;
}

}  // namespace freeburgers
