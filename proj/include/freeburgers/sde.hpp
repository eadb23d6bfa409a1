#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "freeburgers/measures.hpp"

namespace freeburgers {

enum class SdeFamily { dyson, bru_wishart, chiral };

std::string_view to_string(SdeFamily family);
SdeFamily parse_sde_family(std::string_view name);

/// Maximum number of consecutive step halvings before a step fails.
inline constexpr int kMaxStepHalvings = 20;

struct SdeConfig {
  SdeFamily family = SdeFamily::dyson;
  double beta = 2.0;
  /// Rectangularity; ignored for dyson. Must exceed -1.
  double nu = 0.0;
  int particles = 1;
  double dt = 1e-3;
  double horizon = 1.0;
  int replicas = 1;
  std::uint64_t seed = 0;
  /// One entry per particle; empty means all particles start at 0.
  std::vector<double> initial_positions;
  /// Particles pinned at 0 that only enter the empirical measure. Used to
  /// represent a rank-deficient Wishart matrix through its dual.
  int zero_modes = 0;
  /// Multiplies every Brownian increment; 0 gives the deterministic drift.
  double noise_scale = 1.0;

  /// Throws invalid_parameter on inconsistent settings.
  void validate() const;
  /// (N + nu) / N for the represented population.
  double lambda() const;
};

/// Wishart-type configuration whose hydrodynamic limit is the process with
/// parameter lambda started at N delta_0. For lambda < 1 the nonzero spectrum
/// is simulated through the dual matrix and the kernel becomes zero modes.
SdeConfig wishart_config(SdeFamily family, double lambda, int particles, double beta,
                         double dt, double horizon, int replicas, std::uint64_t seed);

struct Ensemble {
  /// positions[m] holds the N particles of replica m, sorted.
  std::vector<std::vector<double>> positions;
  double time = 0.0;
  std::vector<std::mt19937_64> rng;
  std::vector<bool> started;
};

/// Fresh ensemble at time 0 with per-replica streams seeded from (seed, replica).
Ensemble make_ensemble(const SdeConfig& config);

/// One Euler-Maruyama step of size config.dt for every replica. A step whose
/// result changes the particle order is retried as two half steps.
void step(const SdeConfig& config, Ensemble& ensemble, double dt);
inline void step(const SdeConfig& config, Ensemble& ensemble) { step(config, ensemble, config.dt); }

/// Integrates to config.horizon; `observer` (optional) sees the ensemble after every step.
Ensemble simulate(const SdeConfig& config,
                  const std::function<void(const Ensemble&)>& observer = {});

/// Pooled atoms of all replicas with weight 1/(M N); `symmetrized` mirrors
/// every atom with half weight.
MeasureSpec empirical_measure(const Ensemble& ensemble, bool symmetrized);

/// Factor mapping particle positions to the hydrodynamic scale.
double hydrodynamic_scale(const SdeConfig& config);

/// Scaled empirical measure comparable to the limiting measure at time t:
/// dyson on the line, bru_wishart on the half-line, chiral symmetrized.
MeasureSpec hydrodynamic_measure(const SdeConfig& config, const Ensemble& ensemble);

/// Sup distance between the distribution functions, checked at both one-sided
/// limits on the union of atom locations and density grid nodes.
double ks_distance(const MeasureSpec& a, const MeasureSpec& b);

}  // namespace freeburgers
