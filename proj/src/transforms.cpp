#include "freeburgers/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "freeburgers/error.hpp"
#include "freeburgers/parallel.hpp"

namespace freeburgers {

namespace {

constexpr double kAtomThreshold = 1e-3;
constexpr double kAtomSpread = 0.25;
constexpr double kMassSlack = 1e-2;

TruncatedSeries one_plus_z(int order) { return TruncatedSeries::identity(order) + 1.0; }

}  // namespace

CauchyField::CauchyField(Fn upper, FieldKind kind, double support_radius)
    : fn_(std::move(upper)), kind_(kind), radius_(support_radius) {}

cplx CauchyField::operator()(cplx z) const {
  if (!fn_) throw Error(ErrorCode::invalid_input, "empty Cauchy field");
  if (z.imag() > 0.0) return fn_(z);
  if (z.imag() < 0.0) return std::conj(fn_(std::conj(z)));
  if (kind_ == FieldKind::fixed_point) {
    throw Error(ErrorCode::out_of_domain, "fixed-point field evaluated on the real axis");
  }
  return fn_(cplx(z.real(), 0.0));
}

cplx cauchy_eval(const MeasureSpec& mu, cplx z) {
  if (!(z.imag() > 0.0)) throw Error(ErrorCode::out_of_domain, "Cauchy transform needs Im z > 0");
  cplx acc = mu.density_cauchy(z);
  for (const Atom& a : mu.atoms()) acc += a.weight / (z - a.location);
  return acc;
}

CauchyField quadrature_field(const MeasureSpec& mu) {
  auto shared = std::make_shared<const MeasureSpec>(mu);
  return CauchyField(
      [shared](cplx z) {
        cplx acc = shared->density_cauchy(z);
        for (const Atom& a : shared->atoms()) acc += a.weight / (z - a.location);
        return acc;
      },
      FieldKind::quadrature, mu.support_radius());
}

CauchyField dirac_field(double b) {
  return CauchyField([b](cplx z) { return 1.0 / (z - b); }, FieldKind::closed_form, std::abs(b));
}

CauchyField bernoulli_field(double a) {
  return CauchyField([a](cplx z) { return z / (z * z - a * a); }, FieldKind::closed_form, a);
}

CauchyField semicircle_field(double t) {
  const double r = 2.0 * std::sqrt(t);
  return CauchyField(
      [t, r](cplx z) { return (z - std::sqrt(z - r) * std::sqrt(z + r)) / (2.0 * t); },
      FieldKind::closed_form, r);
}

CauchyField marcenko_pastur_field(double lambda, double t) {
  if (lambda == 0.0) return dirac_field(0.0);
  const double sl = std::sqrt(lambda);
  const double xm = t * (1.0 - sl) * (1.0 - sl);
  const double xp = t * (1.0 + sl) * (1.0 + sl);
  return CauchyField(
      [lambda, t, xm, xp](cplx z) {
        return (z + t * (1.0 - lambda) - std::sqrt(z - xp) * std::sqrt(z - xm)) / (2.0 * t * z);
      },
      FieldKind::closed_form, xp);
}

CauchyField cauchy_from_square_pushforward(const CauchyField& nu_field) {
  return CauchyField([nu_field](cplx z) { return z * nu_field(z * z); }, nu_field.kind(),
                     std::sqrt(nu_field.support_radius()));
}

CumulantSequence r_series(const MeasureSpec& mu, int order) {
  return moments_to_cumulants(moments(mu, order));
}

MomentSequence moments_from_field(const CauchyField& field, int order, double radius, int nodes) {
  if (order < 1 || nodes < 2 * order + 4) throw Error(ErrorCode::invalid_parameter, "too few contour nodes");
  if (!(radius > field.support_radius())) {
    throw Error(ErrorCode::invalid_parameter, "contour must enclose the support");
  }
  std::vector<cplx> g(static_cast<std::size_t>(nodes));
  std::vector<cplx> z(static_cast<std::size_t>(nodes));
  for (int j = 0; j < nodes; ++j) {
    const double theta = 2.0 * std::numbers::pi * (j + 0.5) / nodes;
    z[static_cast<std::size_t>(j)] = std::polar(radius, theta);
  }
  parallel_for(z.size(), [&](std::size_t j) { g[j] = field(z[j]); });
  MomentSequence tau;
  for (int n = 1; n <= order; ++n) {
    cplx acc{};
    for (std::size_t j = 0; j < z.size(); ++j) acc += std::pow(z[j], n + 1) * g[j];
    tau.values.push_back(acc.real() / nodes);
  }
  return tau;
}

// ---------------------------------------------------------------------------
// S-transforms

STransformSeries s_from_moments(const MomentSequence& tau, int order) {
  if (tau.order() < order + 1) throw Error(ErrorCode::invalid_input, "S needs moments to order K+1");
  const double scale = std::sqrt(std::abs(tau[2])) + std::abs(tau[1]);
  if (std::abs(tau[1]) <= 1e-12 * scale || tau[1] == 0.0) {
    throw Error(ErrorCode::s_undefined, "first moment vanishes");
  }
  MomentSequence head{std::vector<double>(tau.values.begin(), tau.values.begin() + order + 1)};
  const TruncatedSeries chi = lagrange_invert(head.as_series());
  return {0, divide_by_z(chi) * one_plus_z(order), SBranch::standard};
}

STransformSeries s_from_symmetric_moments(const MomentSequence& tau, int order) {
  if (tau.order() < 2 * order + 2) {
    throw Error(ErrorCode::invalid_input, "symmetric S needs moments to order 2K+2");
  }
  MomentSequence even;
  for (int n = 1; n <= order + 1; ++n) even.values.push_back(tau[2 * n]);
  const STransformSeries s_nu = s_from_moments(even, order);
  TruncatedSeries inner = s_nu.series * one_plus_z(order);
  return {-1, sqrt_series(inner), SBranch::symmetric_plus};
}

STransformSeries s_series(const MeasureSpec& mu, int order) {
  if (order < 1) throw Error(ErrorCode::invalid_parameter, "S order must be >= 1");
  if (mu.atom_at(0.0) >= 1.0 - 1e-12) {
    throw Error(ErrorCode::degenerate_measure, "S-transform needs mu({0}) < 1");
  }
  if (mu.domain() == DomainTag::symmetric) {
    return s_from_symmetric_moments(moments(mu, 2 * order + 2), order);
  }
  return s_from_moments(moments(mu, order + 1), order);
}

MomentSequence moments_from_s(const STransformSeries& s) {
  if (s.half_power == 0) {
    // chi = z S / (1 + z), Psi = chi^{-1}.
    const int k = s.order() + 1;
    TruncatedSeries padded(k);
    for (int n = 0; n < k; ++n) padded[n] = s.series[n];
    const TruncatedSeries chi = multiply_by_z(padded) * reciprocal(one_plus_z(k));
    const TruncatedSeries psi = lagrange_invert(chi);
    MomentSequence tau;
    for (int n = 1; n <= s.order() + 1; ++n) tau.values.push_back(psi[n]);
    return tau;
  }
  if (s.half_power == -1) {
    // S_nu = S^2 z / (1 + z) is the standard S of the square push-forward.
    STransformSeries nu{0, s.series * s.series * reciprocal(one_plus_z(s.order())), SBranch::standard};
    MomentSequence even = moments_from_s(nu);
    MomentSequence tau;
    for (double v : even.values) {
      tau.values.push_back(0.0);
      tau.values.push_back(v);
    }
    return tau;
  }
  throw Error(ErrorCode::invalid_input, "unsupported S prefactor");
}

CumulantSequence free_add(const CumulantSequence& a, const CumulantSequence& b) {
  if (a.order() != b.order()) throw Error(ErrorCode::invalid_input, "cumulant orders differ");
  CumulantSequence out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
  return out;
}

STransformSeries free_mult(const STransformSeries& a, const STransformSeries& b) {
  const SBranch branch = (a.branch == SBranch::standard && b.branch == SBranch::standard)
                             ? SBranch::standard
                             : SBranch::symmetric_plus;
  return {a.half_power + b.half_power, a.series * b.series, branch};
}

// ---------------------------------------------------------------------------
// Stieltjes inversion

namespace {

std::vector<double> sorted_schedule(std::span<const double> eps) {
  if (eps.size() < 2) throw Error(ErrorCode::invalid_parameter, "eps schedule needs >= 2 values");
  std::vector<double> out(eps.begin(), eps.end());
  for (double e : out) {
    if (!(e > 0.0)) throw Error(ErrorCode::invalid_parameter, "eps values must be positive");
  }
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (!(out[i] < out[i - 1])) throw Error(ErrorCode::invalid_parameter, "eps schedule must decrease");
  }
  return out;
}

// Maximizes eps |Im G(x + i eps)| on [a, b] by golden-section search.
std::pair<double, double> golden_peak(const CauchyField& field, double eps, double a, double b) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  auto f = [&](double x) { return eps * std::abs(field(cplx(x, eps)).imag()); };
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

double richardson(double e1, double v1, double e2, double v2) {
  return (e1 * v2 - e2 * v1) / (e1 - e2);
}

}  // namespace

InversionReport stieltjes_invert_values(const CauchyField& field, std::span<const double> grid,
                                        std::span<const double> eps_schedule,
                                        const std::vector<std::vector<cplx>>& values,
                                        DomainTag domain_hint) {
  const std::vector<double> eps = sorted_schedule(eps_schedule);
  const std::size_t n = grid.size();
  if (n < 3) throw Error(ErrorCode::invalid_parameter, "inversion grid needs >= 3 points");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(grid[i] > grid[i - 1])) throw Error(ErrorCode::invalid_parameter, "grid must increase");
  }
  if (values.size() != eps.size()) throw Error(ErrorCode::invalid_input, "values/eps size mismatch");
  for (const auto& row : values) {
    if (row.size() != n) throw Error(ErrorCode::invalid_input, "values/grid size mismatch");
  }
  const std::size_t e1 = eps.size() - 2;
  const std::size_t e2 = eps.size() - 1;

  // Atoms: local maxima of eps |Im G| at the smallest height, checked for
  // stability across the whole schedule.
  std::vector<Atom> atoms;
  const auto& fine = values[e2];
  auto height = [&](std::size_t i) { return eps[e2] * std::abs(fine[i].imag()); };
  for (std::size_t i = 0; i < n; ++i) {
    const double hi = height(i);
    if (hi <= kAtomThreshold) continue;
    if (i > 0 && height(i - 1) >= hi) continue;
    if (i + 1 < n && height(i + 1) > hi) continue;
    const double a = i > 0 ? grid[i - 1] : grid[0] - (grid[1] - grid[0]);
    const double b = i + 1 < n ? grid[i + 1] : grid[n - 1] + (grid[n - 1] - grid[n - 2]);
    std::vector<double> mass(eps.size());
    double location = grid[i];
    for (std::size_t e = 0; e < eps.size(); ++e) {
      const auto [x, m] = golden_peak(field, eps[e], a, b);
      mass[e] = m;
      if (e == e2) location = x;
    }
    const double mmax = *std::max_element(mass.begin(), mass.end());
    const double mmin = *std::min_element(mass.begin(), mass.end());
    if ((mmax - mmin) > kAtomSpread * mmax) continue;
    const double m0 = richardson(eps[e1], mass[e1], eps[e2], mass[e2]);
    if (m0 <= kAtomThreshold) continue;
    if (std::abs(location) < 1e-8) location = 0.0;
    if (!atoms.empty() && std::abs(atoms.back().location - location) < std::max(b - a, eps[e2])) {
      if (m0 > atoms.back().weight) atoms.back() = {location, m0};
      continue;
    }
    atoms.push_back({location, m0});
  }

  // Density: -Im(G - atoms) / pi, extrapolated in eps, clipped at zero.
  std::vector<double> rho(n);
  for (std::size_t i = 0; i < n; ++i) {
    double r[2];
    for (int k = 0; k < 2; ++k) {
      const std::size_t e = k == 0 ? e1 : e2;
      cplx g = values[e][i];
      const cplx z(grid[i], eps[e]);
      for (const Atom& at : atoms) g -= at.weight / (z - at.location);
      r[k] = -g.imag() / std::numbers::pi;
    }
    rho[i] = std::max(0.0, richardson(eps[e1], r[0], eps[e2], r[1]));
  }

  // Resample on a uniform grid with the same number of points.
  DensityGrid g{grid.front(), grid.back(), std::vector<double>(n)};
  const bool symmetric = domain_hint == DomainTag::symmetric &&
                         std::abs(grid.front() + grid.back()) <= 1e-12 * std::abs(grid.back());
  if (symmetric) g.lo = -g.hi;
  std::size_t cell = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (i + 1 == n) ? g.hi : g.node(static_cast<int>(i));
    while (cell + 2 < n && grid[cell + 1] < x) ++cell;
    const double w = std::clamp((x - grid[cell]) / (grid[cell + 1] - grid[cell]), 0.0, 1.0);
    g.values[i] = rho[cell] + w * (rho[cell + 1] - rho[cell]);
  }
  if (symmetric) {
    for (std::size_t i = 0; i < n / 2; ++i) {
      const double m = 0.5 * (g.values[i] + g.values[n - 1 - i]);
      g.values[i] = g.values[n - 1 - i] = m;
    }
    std::vector<Atom> mirrored;
    for (const Atom& a : atoms) {
      if (a.location == 0.0) mirrored.push_back(a);
      else if (a.location > 0.0) {
        mirrored.push_back({-a.location, a.weight});
        mirrored.push_back(a);
      }
    }
    atoms = std::move(mirrored);
  }

  DomainTag domain = DomainTag::real_line;
  if (symmetric) domain = DomainTag::symmetric;
  else if (g.lo >= 0.0 || domain_hint == DomainTag::nonneg_halfline) domain = DomainTag::nonneg_halfline;
  if (domain == DomainTag::nonneg_halfline) {
    for (Atom& a : atoms) a.location = std::max(a.location, 0.0);
  }

  double atom_mass = 0.0;
  for (const Atom& a : atoms) atom_mass += a.weight;
  const double density_mass = g.mass();
  const double raw = atom_mass + density_mass;
  if (std::abs(raw - 1.0) > kMassSlack) {
    throw Error(ErrorCode::inversion_failed,
                "recovered mass " + std::to_string(raw) + " deviates from 1 by more than 1e-2");
  }
  std::optional<DensityGrid> density;
  if (density_mass > 1e-12 && atom_mass < 1.0) {
    const double scale = (1.0 - atom_mass) / density_mass;
    for (double& v : g.values) v *= scale;
    density = std::move(g);
  } else {
    for (Atom& a : atoms) a.weight /= atom_mass;
  }
  return {MeasureSpec::create(std::move(atoms), std::move(density), domain), raw};
}

MeasureSpec stieltjes_invert(const CauchyField& field, std::span<const double> grid,
                             std::span<const double> eps_schedule) {
  const std::vector<double> eps = sorted_schedule(eps_schedule);
  std::vector<std::vector<cplx>> values(eps.size(), std::vector<cplx>(grid.size()));
  parallel_for(eps.size() * grid.size(), [&](std::size_t k) {
    const std::size_t e = k / grid.size();
    const std::size_t i = k % grid.size();
    values[e][i] = field(cplx(grid[i], eps[e]));
  });
  return stieltjes_invert_values(field, grid, eps, values).measure;
}

}  // namespace freeburgers
