#include "freeburgers/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "freeburgers/error.hpp"
#include "freeburgers/parallel.hpp"

namespace freeburgers {

std::string_view to_string(SdeFamily family) {
  switch (family) {
    case SdeFamily::dyson: return "dyson";
    case SdeFamily::bru_wishart: return "wishart";
    case SdeFamily::chiral: return "chiral";
  }
  return "unknown";
}

SdeFamily parse_sde_family(std::string_view name) {
  if (name == "dyson") return SdeFamily::dyson;
  if (name == "wishart" || name == "bru_wishart") return SdeFamily::bru_wishart;
  if (name == "chiral") return SdeFamily::chiral;
  throw Error(ErrorCode::invalid_input, "unknown family '" + std::string(name) + "'");
}

void SdeConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::invalid_parameter, what); };
  if (!(beta > 0.0) || !std::isfinite(beta)) fail("beta must be > 0");
  if (family != SdeFamily::dyson && !(nu > -1.0)) fail("nu must be > -1");
  if (particles < 1) fail("need at least one particle");
  if (zero_modes < 0) fail("zero_modes must be >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be > 0");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) fail("horizon must be >= 0");
  if (replicas < 1) fail("need at least one replica");
  if (!(noise_scale >= 0.0)) fail("noise_scale must be >= 0");
  if (!initial_positions.empty()) {
    if (static_cast<int>(initial_positions.size()) != particles) {
      fail("initial_positions must have one entry per particle");
    }
    for (double x : initial_positions) {
      if (!std::isfinite(x)) fail("initial position not finite");
      if (family != SdeFamily::dyson && x < 0.0) {
        throw Error(ErrorCode::invalid_domain, "wishart and chiral positions must be >= 0");
      }
    }
  }
}

double SdeConfig::lambda() const {
  const double total = particles + zero_modes;
  if (zero_modes > 0) return particles / total;
  return (particles + nu) / particles;
}

SdeConfig wishart_config(SdeFamily family, double lambda, int particles, double beta,
                         double dt, double horizon, int replicas, std::uint64_t seed) {
  if (family == SdeFamily::dyson) throw Error(ErrorCode::invalid_parameter, "wishart_config needs a wishart family");
  if (!(lambda > 0.0)) throw Error(ErrorCode::invalid_parameter, "lambda must be > 0");
  SdeConfig c;
  c.family = family;
  c.beta = beta;
  c.dt = dt;
  c.horizon = horizon;
  c.replicas = replicas;
  c.seed = seed;
  if (lambda >= 1.0) {
    c.particles = particles;
    c.nu = (lambda - 1.0) * particles;
  } else {
    // The (N + nu) x N matrix has N - (N + nu) zero eigenvalues; its nonzero
    // spectrum is that of the dual with N' = lambda N and nu' = N - N'.
    const int active = std::max(1, static_cast<int>(std::lround(lambda * particles)));
    c.particles = active;
    c.nu = particles - active;
    c.zero_modes = particles - active;
  }
  c.validate();
  return c;
}

Ensemble make_ensemble(const SdeConfig& config) {
  config.validate();
  Ensemble e;
  std::vector<double> start = config.initial_positions;
  if (start.empty()) start.assign(config.particles, 0.0);
  std::sort(start.begin(), start.end());
  e.positions.assign(config.replicas, start);
  e.rng.reserve(config.replicas);
  for (int m = 0; m < config.replicas; ++m) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(config.seed >> 32), static_cast<std::uint32_t>(m)};
    e.rng.emplace_back(seq);
  }
  e.started.assign(config.replicas, false);
  return e;
}

namespace {

bool has_coincidence(const std::vector<double>& x) {
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] == x[i - 1]) return true;
  }
  return false;
}

void draw(std::mt19937_64& rng, std::vector<double>& xi) {
  std::normal_distribution<double> normal;
  for (double& v : xi) v = normal(rng);
}

// Interaction drift per particle. The inner loops are written as reductions
// so they vectorize; the chiral pair terms share one division.
void drift(const SdeConfig& c, const std::vector<double>& x, std::vector<double>& out) {
  const std::size_t n = x.size();
  std::fill(out.begin(), out.end(), 0.0);
  const double* xp = x.data();
  double* op = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = xp[i];
    double acc = 0.0;
    if (c.family == SdeFamily::chiral) {
      // 1/(xi - xj) + 1/(xi + xj) = 2 xi d and -1/(xi - xj) + 1/(xi + xj) = -2 xj d.
#pragma omp simd reduction(+ : acc)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = 1.0 / ((xi - xp[j]) * (xi + xp[j]));
        acc += 2.0 * xi * d;
        op[j] -= 2.0 * xp[j] * d;
      }
    } else {
#pragma omp simd reduction(+ : acc)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double inv = 1.0 / (xi - xp[j]);
        acc += inv;
        op[j] -= inv;
      }
    }
    op[i] += acc;
  }
  for (std::size_t i = 0; i < n; ++i) {
    switch (c.family) {
      case SdeFamily::dyson:
        out[i] *= 0.5 * c.beta;
        break;
      case SdeFamily::bru_wishart:
        out[i] = c.beta * ((c.nu + 1.0) + 2.0 * x[i] * out[i]);
        break;
      case SdeFamily::chiral:
        out[i] = 0.5 * c.beta * out[i] + (c.beta * (c.nu + 1.0) - 1.0) / (2.0 * x[i]);
        break;
    }
  }
}

class Stepper {
 public:
  Stepper(const SdeConfig& c, std::vector<double>& x, std::mt19937_64& rng)
      : c_(c), x_(x), rng_(rng), xi_(x.size()), drift_(x.size()), next_(x.size()) {}

  // Free diffusion only, used once to separate coincident starting points.
  void noise_step(double dt) {
    draw(rng_, xi_);
    const double s = c_.noise_scale * std::sqrt(dt);
    for (std::size_t i = 0; i < x_.size(); ++i) {
      switch (c_.family) {
        case SdeFamily::dyson: x_[i] += s * xi_[i]; break;
        case SdeFamily::bru_wishart: x_[i] = std::pow(std::sqrt(x_[i]) + s * xi_[i], 2); break;
        case SdeFamily::chiral: x_[i] = std::abs(x_[i] + s * xi_[i]); break;
      }
    }
    std::sort(x_.begin(), x_.end());
  }

  // Covers dt in substeps short enough that the drift closes no gap (or the
  // distance to the wall at 0) by more than kGapFraction; each substep is
  // halved on an order change.
  void advance(double dt) {
    double left = dt;
    while (left > 0.0) {
      drift(c_, x_, drift_);
      const double h = std::min(left, drift_limit());
      if (!(h > 0.0)) throw SolverError(ErrorCode::step_failed, "particles collided");
      substep(h, 0);
      left -= h;
      if (left < 1e-15 * dt) break;
    }
  }

 private:
  static constexpr double kGapFraction = 0.25;

  double drift_limit() const {
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
      const double closing = drift_[i] - drift_[i + 1];
      if (closing > 0.0) h = std::min(h, kGapFraction * (x_[i + 1] - x_[i]) / closing);
    }
    if (c_.family != SdeFamily::dyson && !x_.empty() && drift_[0] < 0.0) {
      h = std::min(h, kGapFraction * x_[0] / -drift_[0]);
    }
    return h;
  }

  void substep(double h, int depth) {
    if (attempt(h)) return;
    if (depth >= kMaxStepHalvings) {
      throw SolverError(ErrorCode::step_failed,
                        "particle order kept changing after " + std::to_string(kMaxStepHalvings) + " halvings");
    }
    substep(0.5 * h, depth + 1);
    drift(c_, x_, drift_);
    substep(0.5 * h, depth + 1);
  }

  // Uses the drift already stored for the current positions.
  bool attempt(double dt) {
    draw(rng_, xi_);
    const double s = c_.noise_scale * std::sqrt(dt);
    for (std::size_t i = 0; i < x_.size(); ++i) {
      double v = x_[i] + drift_[i] * dt;
      switch (c_.family) {
        case SdeFamily::dyson: v += s * xi_[i]; break;
        case SdeFamily::bru_wishart: v = std::abs(v + 2.0 * std::sqrt(x_[i]) * s * xi_[i]); break;
        case SdeFamily::chiral: v = std::abs(v + s * xi_[i]); break;
      }
      if (!std::isfinite(v)) return false;
      next_[i] = v;
    }
    for (std::size_t i = 1; i < next_.size(); ++i) {
      if (!(next_[i] > next_[i - 1])) return false;
    }
    x_.swap(next_);
    return true;
  }

  const SdeConfig& c_;
  std::vector<double>& x_;
  std::mt19937_64& rng_;
  std::vector<double> xi_, drift_, next_;
};

}  // namespace

void step(const SdeConfig& config, Ensemble& ensemble, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::invalid_parameter, "dt must be > 0");
  parallel_for(ensemble.positions.size(), [&](std::size_t m) {
    Stepper stepper(config, ensemble.positions[m], ensemble.rng[m]);
    if (!ensemble.started[m] && has_coincidence(ensemble.positions[m])) {
      stepper.noise_step(dt);
    } else {
      stepper.advance(dt);
    }
    ensemble.started[m] = true;
  });
  ensemble.time += dt;
}

Ensemble simulate(const SdeConfig& config, const std::function<void(const Ensemble&)>& observer) {
  Ensemble e = make_ensemble(config);
  const long steps = static_cast<long>(std::ceil(config.horizon / config.dt - 1e-9));
  for (long k = 0; k < steps; ++k) {
    const double dt = std::min(config.dt, config.horizon - e.time);
    if (dt <= 0.0) break;
    step(config, e, dt);
    if (observer) observer(e);
  }
  e.time = config.horizon;
  return e;
}

namespace {

MeasureSpec pooled(const Ensemble& ensemble, bool symmetrized, double scale, int zero_modes) {
  const std::size_t m = ensemble.positions.size();
  if (m == 0) throw Error(ErrorCode::invalid_input, "empty ensemble");
  const std::size_t n = ensemble.positions.front().size();
  const double w = 1.0 / (static_cast<double>(m) * static_cast<double>(n + zero_modes));
  std::vector<Atom> atoms;
  atoms.reserve(m * (symmetrized ? 2 * n : n) + 1);
  bool nonneg = true;
  for (const auto& replica : ensemble.positions) {
    for (double x : replica) {
      const double y = x * scale;
      nonneg = nonneg && y >= 0.0;
      if (symmetrized && y != 0.0) {
        atoms.push_back({y, 0.5 * w});
        atoms.push_back({-y, 0.5 * w});
      } else {
        atoms.push_back({y, w});
      }
    }
  }
  if (zero_modes > 0) atoms.push_back({0.0, w * zero_modes * static_cast<double>(m)});
  const DomainTag tag = symmetrized ? DomainTag::symmetric
                                    : (nonneg ? DomainTag::nonneg_halfline : DomainTag::real_line);
  return MeasureSpec::create(std::move(atoms), std::nullopt, tag);
}

}  // namespace

MeasureSpec empirical_measure(const Ensemble& ensemble, bool symmetrized) {
  return pooled(ensemble, symmetrized, 1.0, 0);
}

double hydrodynamic_scale(const SdeConfig& c) {
  const double total = c.particles + c.zero_modes;
  switch (c.family) {
    // Matches the empirical second moment to tau_2(w_0) + t.
    case SdeFamily::dyson: return 1.0 / std::sqrt(0.5 * c.beta * (c.particles - 1) + 1.0);
    // Matches the empirical mean to lambda t.
    case SdeFamily::bru_wishart: return 1.0 / (c.beta * total);
    case SdeFamily::chiral: return 1.0 / std::sqrt(c.beta * total);
  }
  return 1.0;
}

MeasureSpec hydrodynamic_measure(const SdeConfig& config, const Ensemble& ensemble) {
  return pooled(ensemble, config.family == SdeFamily::chiral, hydrodynamic_scale(config),
                config.zero_modes);
}

namespace {

// Distribution function with O(log n) lookups.
class CdfTable {
 public:
  explicit CdfTable(const MeasureSpec& mu) {
    for (const Atom& a : mu.atoms()) {
      loc_.push_back(a.location);
      acc_.push_back((acc_.empty() ? 0.0 : acc_.back()) + a.weight);
    }
    if (mu.density()) {
      grid_ = &*mu.density();
      const auto& v = grid_->values;
      const double h = grid_->spacing();
      cell_.assign(v.size(), 0.0);
      for (std::size_t i = 1; i < v.size(); ++i) cell_[i] = cell_[i - 1] + 0.5 * h * (v[i - 1] + v[i]);
    }
  }

  double right(double x) const { return atoms_below(x, true) + density(x); }
  double left(double x) const { return atoms_below(x, false) + density(x); }

  void nodes(std::vector<double>& out) const {
    out.insert(out.end(), loc_.begin(), loc_.end());
    if (grid_) {
      for (int i = 0; i < grid_->size(); ++i) out.push_back(grid_->node(i));
    }
  }

 private:
  double atoms_below(double x, bool inclusive) const {
    const auto it = inclusive ? std::upper_bound(loc_.begin(), loc_.end(), x)
                              : std::lower_bound(loc_.begin(), loc_.end(), x);
    const auto k = it - loc_.begin();
    return k == 0 ? 0.0 : acc_[k - 1];
  }

  double density(double x) const {
    if (!grid_ || x <= grid_->lo) return 0.0;
    if (x >= grid_->hi) return cell_.back();
    const double h = grid_->spacing();
    const auto i = std::min(static_cast<std::size_t>((x - grid_->lo) / h), cell_.size() - 2);
    const double d = x - grid_->node(static_cast<int>(i));
    const double v0 = grid_->values[i];
    const double v1 = grid_->values[i + 1];
    return cell_[i] + v0 * d + (v1 - v0) * d * d / (2.0 * h);
  }

  std::vector<double> loc_, acc_, cell_;
  const DensityGrid* grid_ = nullptr;
};

}  // namespace

double ks_distance(const MeasureSpec& a, const MeasureSpec& b) {
  const CdfTable fa(a), fb(b);
  std::vector<double> points;
  fa.nodes(points);
  fb.nodes(points);
  double sup = 0.0;
  for (double x : points) {
    sup = std::max(sup, std::abs(fa.right(x) - fb.right(x)));
    sup = std::max(sup, std::abs(fa.left(x) - fb.left(x)));
  }
  return sup;
}

}  // namespace freeburgers
