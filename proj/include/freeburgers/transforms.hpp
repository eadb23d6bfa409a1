#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "freeburgers/measures.hpp"
#include "freeburgers/series.hpp"

namespace freeburgers {

using cplx = std::complex<double>;

enum class FieldKind { closed_form, quadrature, fixed_point };

/// Evaluator z -> G(z) for the Cauchy transform of a measure.
///
/// The wrapped function is only called on the open upper half-plane; the lower
/// half-plane is reached by G(conj z) = conj G(z). Closed-form and quadrature
/// fields may also be evaluated on the real axis away from the support.
class CauchyField {
 public:
  using Fn = std::function<cplx(cplx)>;

  CauchyField() = default;
  CauchyField(Fn upper, FieldKind kind, double support_radius);

  cplx operator()(cplx z) const;
  FieldKind kind() const noexcept { return kind_; }
  double support_radius() const noexcept { return radius_; }
  explicit operator bool() const noexcept { return static_cast<bool>(fn_); }

 private:
  Fn fn_;
  FieldKind kind_ = FieldKind::closed_form;
  double radius_ = 0.0;
};

/// Sum of atoms w / (z - x) plus the density integral; requires Im z > 0.
cplx cauchy_eval(const MeasureSpec& mu, cplx z);

/// Quadrature-backed field of a measure.
CauchyField quadrature_field(const MeasureSpec& mu);

CauchyField dirac_field(double b);
CauchyField bernoulli_field(double a);
CauchyField semicircle_field(double t);
CauchyField marcenko_pastur_field(double lambda, double t);

/// The field z -> z G_nu(z^2) of the symmetrization of nu.
CauchyField cauchy_from_square_pushforward(const CauchyField& nu_field);

CumulantSequence r_series(const MeasureSpec& mu, int order);

/// tau_1..tau_K from G on the circle |z| = radius (radius above the support
/// radius), by the trapezoidal rule on `nodes` points kept off the real axis.
MomentSequence moments_from_field(const CauchyField& field, int order, double radius, int nodes = 128);

enum class SBranch { standard, symmetric_plus };

/// S(z) = z^(half_power / 2) * series(z).
struct STransformSeries {
  int half_power = 0;
  TruncatedSeries series;
  SBranch branch = SBranch::standard;

  int order() const noexcept { return series.order(); }
};

/// S-transform of mu to order K: the standard branch when tau_1 != 0,
/// otherwise the positive symmetric branch for measures tagged symmetric.
STransformSeries s_series(const MeasureSpec& mu, int order);
/// Standard branch from moments tau_1..tau_{K+1}; requires tau_1 != 0.
STransformSeries s_from_moments(const MomentSequence& tau, int order);
/// Symmetric branch from the moments of a symmetric measure (tau_1..tau_{2K+2}).
STransformSeries s_from_symmetric_moments(const MomentSequence& tau, int order);
/// Moments tau_1..tau_{K+1} recovered from a standard-branch S of order K.
MomentSequence moments_from_s(const STransformSeries& s);

CumulantSequence free_add(const CumulantSequence& a, const CumulantSequence& b);
STransformSeries free_mult(const STransformSeries& a, const STransformSeries& b);

inline const std::vector<double> kDefaultEpsSchedule{1e-2, 5e-3, 2.5e-3};

struct InversionReport {
  MeasureSpec measure;
  /// Total mass before renormalization.
  double raw_mass = 0.0;
};

/// Stieltjes-Perron inversion with two-point Richardson extrapolation over the
/// two smallest heights of the schedule and atom detection via eps |Im G|.
MeasureSpec stieltjes_invert(const CauchyField& field, std::span<const double> grid,
                             std::span<const double> eps_schedule);

/// As stieltjes_invert, with G(grid[i] + i eps_schedule[e]) supplied in values[e][i].
/// The field is only used to locate atoms between grid points.
InversionReport stieltjes_invert_values(const CauchyField& field, std::span<const double> grid,
                                        std::span<const double> eps_schedule,
                                        const std::vector<std::vector<cplx>>& values,
                                        DomainTag domain_hint = DomainTag::real_line);

}  // namespace freeburgers
