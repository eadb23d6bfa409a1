#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "freeburgers/series.hpp"

namespace freeburgers {

inline constexpr int kDefaultGridSize = 4096;
/// Atoms closer than this are merged.
inline constexpr double kAtomMergeTolerance = 1e-12;

enum class DomainTag { real_line, nonneg_halfline, symmetric };

struct Atom {
  double location = 0.0;
  double weight = 0.0;
};

/// Density values on the uniform grid lo, lo + h, ..., hi with G = values.size() points.
struct DensityGrid {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> values;

  int size() const noexcept { return static_cast<int>(values.size()); }
  double spacing() const noexcept { return (hi - lo) / (values.size() - 1); }
  double node(int i) const noexcept { return lo + (hi - lo) * i / (values.size() - 1); }
  /// Piecewise-linear interpolant, zero outside [lo, hi].
  double at(double x) const;
  double mass() const;
};

/// A closed-form density component rho on [lo, hi] behaving like
/// (x - lo)^alpha_lo at the left edge and (hi - x)^alpha_hi at the right one.
///
/// Integrals against it use Gauss-Jacobi rules matched to the edge exponents
/// with adaptive bisection, so square-root edges and inverse-square-root
/// singularities cost nothing extra. Immutable; safe to share across threads.
class DensityPiece {
 public:
  DensityPiece(double lo, double hi, double alpha_lo, double alpha_hi,
               std::function<double(double)> rho);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double alpha_lo() const noexcept { return alpha_lo_; }
  double alpha_hi() const noexcept { return alpha_hi_; }

  /// Density value; 0 outside [lo, hi].
  double operator()(double x) const;
  /// Integral of f * rho over the piece.
  double integrate(const std::function<double(double)>& f) const;
  /// Integral of rho(x) / (z - x); z off the real axis.
  std::complex<double> cauchy(std::complex<double> z) const;
  double mass() const;

 private:
  struct Rules;
  double lo_, hi_, alpha_lo_, alpha_hi_;
  std::function<double(double)> rho_;
  std::shared_ptr<const Rules> rules_;
};

/// A compactly supported probability measure: atoms plus an optional density.
///
/// The density is always carried as a uniform grid. Measures built from
/// closed forms additionally keep the analytic pieces, and when present those
/// are used for moments, Cauchy transforms and point evaluation.
class MeasureSpec {
 public:
  /// Validates mass, signs, domain and symmetry; merges coincident atoms.
  static MeasureSpec create(std::vector<Atom> atoms, std::optional<DensityGrid> density,
                            DomainTag domain, std::vector<DensityPiece> pieces = {});

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const std::optional<DensityGrid>& density() const noexcept { return density_; }
  const std::vector<DensityPiece>& pieces() const noexcept { return pieces_; }
  DomainTag domain() const noexcept { return domain_; }

  double atom_mass() const;
  double density_mass() const;
  double mass() const { return atom_mass() + density_mass(); }
  /// Weight of the atom at x (within the merge tolerance), 0 if none.
  double atom_at(double x) const;
  double density_at(double x) const;
  /// mu((-inf, x]) and mu((-inf, x)).
  double cdf(double x) const;
  double cdf_left(double x) const;
  /// Closed hull of atoms and density support.
  std::pair<double, double> support() const;
  double support_radius() const;

  /// Integral of f against the density part (pieces when known, else trapezoid).
  double integrate_density(const std::function<double(double)>& f) const;
  /// Cauchy transform of the density part at z off the real axis.
  std::complex<double> density_cauchy(std::complex<double> z) const;

 private:
  std::vector<Atom> atoms_;
  std::optional<DensityGrid> density_;
  std::vector<DensityPiece> pieces_;
  DomainTag domain_ = DomainTag::real_line;
};

MeasureSpec make_dirac(double b);
MeasureSpec make_bernoulli(double a);
MeasureSpec make_semicircle(double t, int grid_size = kDefaultGridSize);
MeasureSpec make_marcenko_pastur(double lambda, double t, int grid_size = kDefaultGridSize);

/// Law of x^2 under mu.
MeasureSpec push_forward_square(const MeasureSpec& mu);
/// The symmetric measure whose square push-forward is nu (nu on the half-line).
MeasureSpec symmetrize(const MeasureSpec& nu);

/// tau_1..tau_K.
MomentSequence moments(const MeasureSpec& mu, int order);

/// Samples analytic pieces onto a uniform grid of `grid_size` points over
/// [lo, hi], fixing the trapezoidal mass to the exact mass of the pieces.
DensityGrid sample_pieces(const std::vector<DensityPiece>& pieces, double lo, double hi,
                          int grid_size);

}  // namespace freeburgers
