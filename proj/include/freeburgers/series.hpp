#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace freeburgers {

/// Real power series c_0 + c_1 z + ... + c_K z^K, truncated at order K.
///
/// Binary operations between series of different orders truncate to the
/// smaller order, so every coefficient of a result is exact in the sense of
/// formal power series.
class TruncatedSeries {
 public:
  TruncatedSeries() : coeffs_(1, 0.0) {}
  explicit TruncatedSeries(int order);
  explicit TruncatedSeries(std::vector<double> coeffs);
  TruncatedSeries(std::initializer_list<double> coeffs);

  static TruncatedSeries constant(double c, int order);
  /// c * z^power truncated at `order`.
  static TruncatedSeries monomial(double c, int power, int order);
  /// The identity map z.
  static TruncatedSeries identity(int order) { return monomial(1.0, 1, order); }

  int order() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  double operator[](int n) const { return coeffs_[static_cast<std::size_t>(n)]; }
  double& operator[](int n) { return coeffs_[static_cast<std::size_t>(n)]; }
  /// Coefficient n, or 0 beyond the truncation order.
  double coeff(int n) const noexcept {
    return n >= 0 && n <= order() ? coeffs_[static_cast<std::size_t>(n)] : 0.0;
  }
  std::span<const double> coeffs() const noexcept { return coeffs_; }

  TruncatedSeries truncated(int order) const;
  double eval(double z) const;

  TruncatedSeries& operator+=(const TruncatedSeries& rhs);
  TruncatedSeries& operator-=(const TruncatedSeries& rhs);
  TruncatedSeries& operator*=(double s);

  friend TruncatedSeries operator+(TruncatedSeries a, const TruncatedSeries& b) { return a += b; }
  friend TruncatedSeries operator-(TruncatedSeries a, const TruncatedSeries& b) { return a -= b; }
  friend TruncatedSeries operator*(TruncatedSeries a, double s) { return a *= s; }
  friend TruncatedSeries operator*(double s, TruncatedSeries a) { return a *= s; }
  friend TruncatedSeries operator-(TruncatedSeries a) { return a *= -1.0; }
  friend TruncatedSeries operator+(TruncatedSeries a, double c) { a[0] += c; return a; }
  friend TruncatedSeries operator+(double c, TruncatedSeries a) { a[0] += c; return a; }
  friend TruncatedSeries operator-(TruncatedSeries a, double c) { a[0] -= c; return a; }
  friend TruncatedSeries operator-(double c, TruncatedSeries a) { a *= -1.0; a[0] += c; return a; }
  friend TruncatedSeries operator*(const TruncatedSeries& a, const TruncatedSeries& b);
  friend TruncatedSeries operator/(const TruncatedSeries& a, const TruncatedSeries& b);

 private:
  std::vector<double> coeffs_;
};

/// 1/f; requires f[0] != 0 (throws not-invertible).
TruncatedSeries reciprocal(const TruncatedSeries& f);

/// f(g(z)); requires g[0] == 0 (throws composition-undefined).
TruncatedSeries compose(const TruncatedSeries& f, const TruncatedSeries& g);

/// Compositional inverse g with f(g(z)) = g(f(z)) = z.
/// Requires f[0] == 0 and f[1] != 0 (throws not-invertible when f[1] == 0).
TruncatedSeries lagrange_invert(const TruncatedSeries& f);

/// Square root with positive leading coefficient; requires f[0] > 0.
TruncatedSeries sqrt_series(const TruncatedSeries& f);

/// f^(half_power / 2) for f[0] > 0, taking the positive branch.
TruncatedSeries half_power(const TruncatedSeries& f, int half_power);

/// f(z) / z for a series whose constant term vanishes; the result loses one order.
TruncatedSeries divide_by_z(const TruncatedSeries& f);
/// z * f(z), keeping the order of f.
TruncatedSeries multiply_by_z(const TruncatedSeries& f);

/// For an even series f(z) = sum a_n z^{2n}, the series h(w) = sum a_n w^n.
TruncatedSeries even_part_in_square(const TruncatedSeries& f);
/// h(z^2) for a series h; the order doubles.
TruncatedSeries substitute_square(const TruncatedSeries& h);

double max_abs_diff(const TruncatedSeries& a, const TruncatedSeries& b);

/// Moments tau_1..tau_K of a measure.
struct MomentSequence {
  std::vector<double> values;

  int order() const noexcept { return static_cast<int>(values.size()); }
  double operator[](int n) const { return values[static_cast<std::size_t>(n - 1)]; }
  /// Psi(z) = sum tau_n z^n.
  TruncatedSeries as_series() const;
};

/// Free cumulants kappa_1..kappa_K; the coefficients of R(z) = sum kappa_n z^n.
struct CumulantSequence {
  std::vector<double> values;

  int order() const noexcept { return static_cast<int>(values.size()); }
  double operator[](int n) const { return values[static_cast<std::size_t>(n - 1)]; }
  TruncatedSeries as_series() const;
  static CumulantSequence from_series(const TruncatedSeries& r);
};

/// Solves tau_n = sum_k kappa_k [z^{n-k}] M(z)^k, M = 1 + Psi, for the kappa_n.
CumulantSequence moments_to_cumulants(const MomentSequence& tau);
/// Runs the same recursion forward.
MomentSequence cumulants_to_moments(const CumulantSequence& kappa);

}  // namespace freeburgers
