#include "freeburgers/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "freeburgers/error.hpp"
#include "freeburgers/quadrature.hpp"

namespace freeburgers {

namespace {

constexpr double kMassTolerance = 1e-9;
constexpr double kSymmetryTolerance = 1e-12;
constexpr int kRuleSize = 24;
constexpr int kMaxDepth = 48;

}  // namespace

// ---------------------------------------------------------------------------
// DensityGrid

double DensityGrid::at(double x) const {
  if (values.size() < 2 || x < lo || x > hi) return 0.0;
  const double h = spacing();
  const double pos = (x - lo) / h;
  const auto i = std::min(static_cast<std::size_t>(pos), values.size() - 2);
  const double frac = pos - static_cast<double>(i);
  return values[i] + (values[i + 1] - values[i]) * frac;
}

double DensityGrid::mass() const { return trapezoid(values, spacing()); }

// ---------------------------------------------------------------------------
// DensityPiece

struct DensityPiece::Rules {
  GaussRule both;    // weight at both ends
  GaussRule left;    // weight at the left end only
  GaussRule right;   // weight at the right end only
  GaussRule plain;   // Legendre
};

DensityPiece::DensityPiece(double lo, double hi, double alpha_lo, double alpha_hi,
                           std::function<double(double)> rho)
    : lo_(lo), hi_(hi), alpha_lo_(alpha_lo), alpha_hi_(alpha_hi), rho_(std::move(rho)) {
  if (!(lo < hi)) throw Error(ErrorCode::invalid_parameter, "density piece needs lo < hi");
  if (!(alpha_lo > -1.0) || !(alpha_hi > -1.0)) {
    throw Error(ErrorCode::invalid_parameter, "edge exponents must exceed -1");
  }
  auto rules = std::make_shared<Rules>();
  // Jacobi (1 - xi)^alpha (1 + xi)^beta: alpha sits at the right end.
  rules->both = gauss_jacobi(kRuleSize, alpha_hi, alpha_lo);
  rules->left = gauss_jacobi(kRuleSize, 0.0, alpha_lo);
  rules->right = gauss_jacobi(kRuleSize, alpha_hi, 0.0);
  rules->plain = gauss_jacobi(kRuleSize, 0.0, 0.0);
  rules_ = std::move(rules);
}

double DensityPiece::operator()(double x) const {
  if (x < lo_ || x > hi_) return 0.0;
  return rho_(x);
}

namespace {

template <class T, class F>
T piece_rule(const GaussRule& rule, double u, double v, double a, double b, const F& g) {
  const double half = 0.5 * (v - u);
  const double mid = 0.5 * (u + v);
  T acc{};
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double x = mid + half * rule.nodes[k];
    double denom = 1.0;
    if (a != 0.0) denom *= std::pow(x - u, a);
    if (b != 0.0) denom *= std::pow(v - x, b);
    acc += rule.weights[k] * (g(x) / denom);
  }
  return acc * std::pow(half, 1.0 + a + b);
}

}  // namespace

template <class T, class F>
static T integrate_piece(const DensityPiece& piece, const GaussRule& both, const GaussRule& left,
                         const GaussRule& right, const GaussRule& plain, const F& g,
                         double rel_tol, double abs_tol) {
  const double lo = piece.lo();
  const double hi = piece.hi();
  auto sub = [&](double u, double v) -> T {
    const bool at_lo = (u == lo);
    const bool at_hi = (v == hi);
    if (at_lo && at_hi) return piece_rule<T>(both, u, v, piece.alpha_lo(), piece.alpha_hi(), g);
    if (at_lo) return piece_rule<T>(left, u, v, piece.alpha_lo(), 0.0, g);
    if (at_hi) return piece_rule<T>(right, u, v, 0.0, piece.alpha_hi(), g);
    return piece_rule<T>(plain, u, v, 0.0, 0.0, g);
  };
  auto adapt = [&](auto&& self, double u, double v, T whole, int depth) -> T {
    const double mid = 0.5 * (u + v);
    const T l = sub(u, mid);
    const T r = sub(mid, v);
    const T sum = l + r;
    if (std::abs(sum - whole) <= rel_tol * std::abs(sum) + abs_tol || depth >= kMaxDepth) return sum;
    return self(self, u, mid, l, depth + 1) + self(self, mid, v, r, depth + 1);
  };
  return adapt(adapt, lo, hi, sub(lo, hi), 0);
}

double DensityPiece::integrate(const std::function<double(double)>& f) const {
  auto g = [&](double x) { return f(x) * rho_(x); };
  return integrate_piece<double>(*this, rules_->both, rules_->left, rules_->right, rules_->plain,
                                 g, 1e-14, 1e-16);
}

std::complex<double> DensityPiece::cauchy(std::complex<double> z) const {
  auto g = [&](double x) { return rho_(x) / (z - x); };
  return integrate_piece<std::complex<double>>(*this, rules_->both, rules_->left, rules_->right,
                                               rules_->plain, g, 1e-13, 1e-15);
}

double DensityPiece::mass() const {
  return integrate([](double) { return 1.0; });
}

// ---------------------------------------------------------------------------
// MeasureSpec

namespace {

std::vector<Atom> merge_atoms(std::vector<Atom> atoms) {
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.location < b.location; });
  std::vector<Atom> out;
  for (const Atom& a : atoms) {
    if (!out.empty() && std::abs(a.location - out.back().location) <= kAtomMergeTolerance) {
      out.back().weight += a.weight;
    } else {
      out.push_back(a);
    }
  }
  return out;
}

bool grid_is_symmetric(const DensityGrid& g) {
  if (std::abs(g.lo + g.hi) > kSymmetryTolerance) return false;
  const std::size_t n = g.values.size();
  for (std::size_t i = 0; i < n / 2; ++i) {
    if (std::abs(g.values[i] - g.values[n - 1 - i]) > kSymmetryTolerance) return false;
  }
  return true;
}

bool atoms_are_symmetric(const std::vector<Atom>& atoms) {
  const std::size_t n = atoms.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = atoms[i];
    const Atom& m = atoms[n - 1 - i];
    if (std::abs(a.location + m.location) > kSymmetryTolerance) return false;
    if (std::abs(a.weight - m.weight) > kSymmetryTolerance) return false;
  }
  return true;
}

}  // namespace

MeasureSpec MeasureSpec::create(std::vector<Atom> atoms, std::optional<DensityGrid> density,
                                DomainTag domain, std::vector<DensityPiece> pieces) {
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.location)) throw Error(ErrorCode::invalid_parameter, "atom location not finite");
    if (!(a.weight > 0.0) || a.weight > 1.0 + kMassTolerance) {
      throw Error(ErrorCode::invalid_parameter, "atom weight outside (0, 1]: " + std::to_string(a.weight));
    }
  }
  MeasureSpec mu;
  mu.atoms_ = merge_atoms(std::move(atoms));
  mu.domain_ = domain;
  if (density) {
    if (density->values.size() < 2) throw Error(ErrorCode::invalid_parameter, "density grid needs >= 2 points");
    if (!(density->lo < density->hi)) throw Error(ErrorCode::invalid_parameter, "density needs lo < hi");
    for (double v : density->values) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::invalid_parameter, "density values must be finite and non-negative");
      }
    }
    mu.density_ = std::move(density);
  }
  mu.pieces_ = std::move(pieces);

  const double total = mu.mass();
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw Error(ErrorCode::invalid_parameter, "total mass " + std::to_string(total) + " != 1");
  }
  if (domain == DomainTag::nonneg_halfline) {
    for (const Atom& a : mu.atoms_) {
      if (a.location < 0.0) throw Error(ErrorCode::invalid_domain, "negative atom on the half-line");
    }
    if (mu.density_ && mu.density_->lo < 0.0) {
      throw Error(ErrorCode::invalid_domain, "density support extends below 0");
    }
  }
  if (domain == DomainTag::symmetric) {
    if (!atoms_are_symmetric(mu.atoms_) || (mu.density_ && !grid_is_symmetric(*mu.density_))) {
      throw Error(ErrorCode::invalid_domain, "measure tagged symmetric is not symmetric");
    }
  }
  return mu;
}

double MeasureSpec::atom_mass() const {
  double m = 0.0;
  for (const Atom& a : atoms_) m += a.weight;
  return m;
}

double MeasureSpec::density_mass() const { return density_ ? density_->mass() : 0.0; }

double MeasureSpec::atom_at(double x) const {
  for (const Atom& a : atoms_) {
    if (std::abs(a.location - x) <= kAtomMergeTolerance) return a.weight;
  }
  return 0.0;
}

double MeasureSpec::density_at(double x) const {
  if (!pieces_.empty()) {
    double acc = 0.0;
    for (const auto& p : pieces_) acc += p(x);
    return acc;
  }
  return density_ ? density_->at(x) : 0.0;
}

namespace {

// Integral of the piecewise-linear interpolant over [lo, x].
double grid_cdf(const DensityGrid& g, double x) {
  if (x <= g.lo) return 0.0;
  const double h = g.spacing();
  const std::size_t n = g.values.size();
  const double xe = std::min(x, g.hi);
  const double pos = (xe - g.lo) / h;
  const auto cells = std::min(static_cast<std::size_t>(pos), n - 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < cells; ++i) acc += 0.5 * h * (g.values[i] + g.values[i + 1]);
  if (cells < n - 1) {
    const double d = xe - g.node(static_cast<int>(cells));
    const double v0 = g.values[cells];
    const double v1 = g.values[cells + 1];
    acc += v0 * d + (v1 - v0) * d * d / (2.0 * h);
  }
  return acc;
}

}  // namespace

double MeasureSpec::cdf(double x) const {
  double acc = density_ ? grid_cdf(*density_, x) : 0.0;
  for (const Atom& a : atoms_) {
    if (a.location <= x) acc += a.weight;
  }
  return acc;
}

double MeasureSpec::cdf_left(double x) const {
  double acc = density_ ? grid_cdf(*density_, x) : 0.0;
  for (const Atom& a : atoms_) {
    if (a.location < x) acc += a.weight;
  }
  return acc;
}

std::pair<double, double> MeasureSpec::support() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Atom& a : atoms_) {
    lo = std::min(lo, a.location);
    hi = std::max(hi, a.location);
  }
  if (density_ && density_->mass() > 0.0) {
    lo = std::min(lo, density_->lo);
    hi = std::max(hi, density_->hi);
  }
  return {lo, hi};
}

double MeasureSpec::support_radius() const {
  const auto [lo, hi] = support();
  return std::max(std::abs(lo), std::abs(hi));
}

double MeasureSpec::integrate_density(const std::function<double(double)>& f) const {
  if (!pieces_.empty()) {
    double acc = 0.0;
    for (const auto& p : pieces_) acc += p.integrate(f);
    return acc;
  }
  if (!density_) return 0.0;
  const DensityGrid& g = *density_;
  std::vector<double> fv(g.values.size());
  for (std::size_t i = 0; i < fv.size(); ++i) fv[i] = f(g.node(static_cast<int>(i))) * g.values[i];
  return trapezoid(fv, g.spacing());
}

namespace {

// Exact Cauchy integral of the piecewise-linear interpolant of the grid.
std::complex<double> grid_cauchy(const DensityGrid& g, std::complex<double> z) {
  using C = std::complex<double>;
  const double h = g.spacing();
  const std::size_t n = g.values.size();
  C acc{};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double v0 = g.values[i];
    const double v1 = g.values[i + 1];
    if (v0 == 0.0 && v1 == 0.0) continue;
    const double s = (v1 - v0) / h;
    const C w = z - g.node(static_cast<int>(i));
    const C q = h / w;
    if (std::abs(q) < 0.5) {
      // -log(1 - q) = sum q^k / k; the slope term telescopes against s h.
      C qk = q;
      C log_sum{};
      C slope_sum{};
      for (int k = 1; k < 80; ++k) {
        log_sum += qk / static_cast<double>(k);
        slope_sum += qk / static_cast<double>(k + 1);
        if (std::abs(qk) < 1e-18 * std::abs(log_sum)) break;
        qk *= q;
      }
      acc += v0 * log_sum + s * h * slope_sum;
    } else {
      const C dlog = std::log(w) - std::log(w - h);
      acc += (v0 + s * w) * dlog - s * h;
    }
  }
  return acc;
}

}  // namespace

std::complex<double> MeasureSpec::density_cauchy(std::complex<double> z) const {
  if (!pieces_.empty()) {
    std::complex<double> acc{};
    for (const auto& p : pieces_) acc += p.cauchy(z);
    return acc;
  }
  return density_ ? grid_cauchy(*density_, z) : std::complex<double>{};
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

bool singular_at(const DensityPiece& p, double x) {
  return (x == p.lo() && p.alpha_lo() < 0.0) || (x == p.hi() && p.alpha_hi() < 0.0);
}

// Adjusts grid values so the trapezoidal mass equals `target`: mass missing at
// singular nodes is placed there, otherwise the grid is rescaled.
void fix_mass(DensityGrid& g, double target, const std::vector<int>& singular_nodes) {
  const double h = g.spacing();
  const double current = g.mass();
  const double deficit = target - current;
  if (!singular_nodes.empty() && deficit > 0.0) {
    const double share = deficit / static_cast<double>(singular_nodes.size());
    for (int i : singular_nodes) {
      const bool end = (i == 0 || i == g.size() - 1);
      g.values[static_cast<std::size_t>(i)] += share / (end ? 0.5 * h : h);
    }
  } else if (current > 0.0) {
    for (double& v : g.values) v *= target / current;
  }
}

void enforce_symmetry(DensityGrid& g) {
  const std::size_t n = g.values.size();
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double m = 0.5 * (g.values[i] + g.values[n - 1 - i]);
    g.values[i] = m;
    g.values[n - 1 - i] = m;
  }
}

}  // namespace

DensityGrid sample_pieces(const std::vector<DensityPiece>& pieces, double lo, double hi,
                          int grid_size) {
  if (grid_size < 2) throw Error(ErrorCode::invalid_parameter, "grid size must be >= 2");
  DensityGrid g{lo, hi, std::vector<double>(static_cast<std::size_t>(grid_size), 0.0)};
  std::vector<int> singular;
  double exact = 0.0;
  for (const auto& p : pieces) exact += p.mass();
  for (int i = 0; i < grid_size; ++i) {
    const double x = (i == grid_size - 1) ? hi : g.node(i);
    double v = 0.0;
    bool sing = false;
    for (const auto& p : pieces) {
      if (singular_at(p, x)) {
        sing = true;
        continue;
      }
      const double pv = p(x);
      if (std::isfinite(pv)) v += std::max(pv, 0.0);
      else sing = true;
    }
    g.values[static_cast<std::size_t>(i)] = v;
    if (sing) singular.push_back(i);
  }
  fix_mass(g, exact, singular);
  return g;
}

// ---------------------------------------------------------------------------
// Named measures

MeasureSpec make_dirac(double b) {
  return MeasureSpec::create({{b, 1.0}}, std::nullopt,
                             b >= 0.0 ? DomainTag::nonneg_halfline : DomainTag::real_line);
}

MeasureSpec make_bernoulli(double a) {
  if (!(a > 0.0)) throw Error(ErrorCode::invalid_parameter, "bernoulli needs a > 0");
  return MeasureSpec::create({{-a, 0.5}, {a, 0.5}}, std::nullopt, DomainTag::symmetric);
}

MeasureSpec make_semicircle(double t, int grid_size) {
  if (!(t > 0.0)) throw Error(ErrorCode::invalid_parameter, "semicircle needs t > 0");
  const double r = 2.0 * std::sqrt(t);
  DensityPiece piece(-r, r, 0.5, 0.5, [t](double x) {
    return std::sqrt(std::max(0.0, 4.0 * t - x * x)) / (2.0 * std::numbers::pi * t);
  });
  std::vector<DensityPiece> pieces{piece};
  DensityGrid g = sample_pieces(pieces, -r, r, grid_size);
  enforce_symmetry(g);
  return MeasureSpec::create({}, std::move(g), DomainTag::symmetric, std::move(pieces));
}

MeasureSpec make_marcenko_pastur(double lambda, double t, int grid_size) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::invalid_parameter, "marcenko_pastur needs lambda >= 0");
  if (!(t > 0.0)) throw Error(ErrorCode::invalid_parameter, "marcenko_pastur needs t > 0");
  if (lambda == 0.0) return make_dirac(0.0);
  const double sl = std::sqrt(lambda);
  const double xm = t * (1.0 - sl) * (1.0 - sl);
  const double xp = t * (1.0 + sl) * (1.0 + sl);
  std::vector<Atom> atoms;
  if (lambda < 1.0) atoms.push_back({0.0, 1.0 - lambda});
  const double alpha_lo = (lambda == 1.0) ? -0.5 : 0.5;
  const double lo = (lambda == 1.0) ? 0.0 : xm;
  DensityPiece piece(lo, xp, alpha_lo, 0.5, [t, xm, xp](double x) {
    return std::sqrt(std::max(0.0, (x - xm) * (xp - x))) / (2.0 * std::numbers::pi * t * x);
  });
  std::vector<DensityPiece> pieces{piece};
  DensityGrid g = sample_pieces(pieces, lo, xp, grid_size);
  return MeasureSpec::create(std::move(atoms), std::move(g), DomainTag::nonneg_halfline,
                             std::move(pieces));
}

// ---------------------------------------------------------------------------
// Push-forward and symmetrization

namespace {

int grid_size_of(const MeasureSpec& mu) {
  return mu.density() ? mu.density()->size() : kDefaultGridSize;
}

std::vector<DensityPiece> square_pieces(const std::vector<DensityPiece>& pieces) {
  std::vector<DensityPiece> out;
  auto map_positive = [&out](const DensityPiece& p, double lo, double hi, double alo, double ahi) {
    // Piece restricted to [lo, hi] within [0, inf).
    const double new_alo = (lo == 0.0) ? 0.5 * (alo - 1.0) : alo;
    out.emplace_back(lo * lo, hi * hi, new_alo, ahi, [p](double y) {
      const double r = std::sqrt(y);
      return p(r) / (2.0 * r);
    });
  };
  auto map_negative = [&out](const DensityPiece& p, double lo, double hi, double alo, double ahi) {
    // Piece restricted to [lo, hi] within (-inf, 0]; its image is [hi^2, lo^2].
    const double new_alo = (hi == 0.0) ? 0.5 * (ahi - 1.0) : ahi;
    out.emplace_back(hi * hi, lo * lo, new_alo, alo, [p](double y) {
      const double r = std::sqrt(y);
      return p(-r) / (2.0 * r);
    });
  };
  for (const auto& p : pieces) {
    if (p.lo() >= 0.0) {
      map_positive(p, p.lo(), p.hi(), p.alpha_lo(), p.alpha_hi());
    } else if (p.hi() <= 0.0) {
      map_negative(p, p.lo(), p.hi(), p.alpha_lo(), p.alpha_hi());
    } else {
      map_negative(p, p.lo(), 0.0, p.alpha_lo(), 0.0);
      map_positive(p, 0.0, p.hi(), 0.0, p.alpha_hi());
    }
  }
  return out;
}

std::vector<DensityPiece> root_pieces(const std::vector<DensityPiece>& pieces) {
  std::vector<DensityPiece> out;
  for (const auto& p : pieces) {
    const double a = std::sqrt(p.lo());
    const double b = std::sqrt(p.hi());
    const double alo = (p.lo() == 0.0) ? 2.0 * p.alpha_lo() + 1.0 : p.alpha_lo();
    auto rho = [p](double x) { return p(x * x) * std::abs(x); };
    out.emplace_back(a, b, alo, p.alpha_hi(), rho);
    out.emplace_back(-b, -a, p.alpha_hi(), alo, rho);
  }
  return out;
}

}  // namespace

MeasureSpec push_forward_square(const MeasureSpec& mu) {
  std::vector<Atom> atoms;
  for (const Atom& a : mu.atoms()) atoms.push_back({a.location * a.location, a.weight});

  std::optional<DensityGrid> grid;
  std::vector<DensityPiece> pieces;
  if (mu.density() && mu.density_mass() > 0.0) {
    const DensityGrid& src = *mu.density();
    const double ylo = (src.lo <= 0.0 && src.hi >= 0.0) ? 0.0 : std::min(src.lo * src.lo, src.hi * src.hi);
    const double yhi = std::max(src.lo * src.lo, src.hi * src.hi);
    const int n = grid_size_of(mu);
    if (!mu.pieces().empty()) {
      pieces = square_pieces(mu.pieces());
      grid = sample_pieces(pieces, ylo, yhi, n);
    } else {
      DensityGrid g{ylo, yhi, std::vector<double>(static_cast<std::size_t>(n), 0.0)};
      std::vector<int> singular;
      for (int i = 0; i < n; ++i) {
        const double y = (i == n - 1) ? yhi : g.node(i);
        if (y == 0.0) {
          if (src.at(0.0) > 0.0) singular.push_back(i);
          continue;
        }
        const double r = std::sqrt(y);
        g.values[static_cast<std::size_t>(i)] = (src.at(r) + src.at(-r)) / (2.0 * r);
      }
      fix_mass(g, mu.density_mass(), singular);
      grid = std::move(g);
    }
  }
  return MeasureSpec::create(std::move(atoms), std::move(grid), DomainTag::nonneg_halfline,
                             std::move(pieces));
}

MeasureSpec symmetrize(const MeasureSpec& nu) {
  if (nu.domain() != DomainTag::nonneg_halfline) {
    throw Error(ErrorCode::invalid_domain, "symmetrization needs a measure on the half-line");
  }
  std::vector<Atom> atoms;
  for (const Atom& a : nu.atoms()) {
    if (a.location == 0.0) {
      atoms.push_back({0.0, a.weight});
    } else {
      const double r = std::sqrt(a.location);
      atoms.push_back({-r, 0.5 * a.weight});
      atoms.push_back({r, 0.5 * a.weight});
    }
  }
  std::optional<DensityGrid> grid;
  std::vector<DensityPiece> pieces;
  if (nu.density() && nu.density_mass() > 0.0) {
    const DensityGrid& src = *nu.density();
    const double c = std::sqrt(src.hi);
    const int n = grid_size_of(nu);
    if (!nu.pieces().empty()) {
      pieces = root_pieces(nu.pieces());
      grid = sample_pieces(pieces, -c, c, n);
    } else {
      DensityGrid g{-c, c, std::vector<double>(static_cast<std::size_t>(n), 0.0)};
      for (int i = 0; i < n; ++i) {
        const double x = g.node(i);
        g.values[static_cast<std::size_t>(i)] = src.at(x * x) * std::abs(x);
      }
      fix_mass(g, nu.density_mass(), {});
      grid = std::move(g);
    }
    enforce_symmetry(*grid);
  }
  return MeasureSpec::create(std::move(atoms), std::move(grid), DomainTag::symmetric,
                             std::move(pieces));
}

MomentSequence moments(const MeasureSpec& mu, int order) {
  if (order < 1) throw Error(ErrorCode::invalid_parameter, "moment order must be >= 1");
  MomentSequence tau;
  tau.values.assign(static_cast<std::size_t>(order), 0.0);
  for (int n = 1; n <= order; ++n) {
    double acc = 0.0;
    for (const Atom& a : mu.atoms()) acc += a.weight * std::pow(a.location, n);
    acc += mu.integrate_density([n](double x) { return std::pow(x, n); });
    tau.values[static_cast<std::size_t>(n - 1)] = acc;
  }
  return tau;
}

}  // namespace freeburgers
