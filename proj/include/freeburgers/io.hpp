#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "freeburgers/measures.hpp"
#include "freeburgers/transforms.hpp"

namespace freeburgers {

using json = nlohmann::json;

/// {"atoms": [[x, w], ...], "density": {"lo": a, "hi": b, "values": [...]},
///  "domain": "real" | "nonneg" | "symmetric"}
MeasureSpec measure_from_json(const json& j);
json measure_to_json(const MeasureSpec& mu);

std::string_view domain_name(DomainTag tag);
DomainTag parse_domain(std::string_view name);

/// A starting measure with the Cauchy field used by the solvers.
struct InitialCondition {
  MeasureSpec measure;
  CauchyField field;
  /// Canonical form of the spec it was built from.
  std::string label;
  /// Closed-form field of the square push-forward, when the measure is symmetric and one is known.
  std::optional<CauchyField> square_field = std::nullopt;
};

/// Parses "dirac:b=0.7", "bernoulli:a=1", "semicircle:t=1", "mp:lambda=0.5,t=1"
/// (closed-form fields), or a path to a measure JSON file (quadrature field).
InitialCondition parse_initial(std::string_view spec, int grid_size = kDefaultGridSize);

struct RunManifest {
  static constexpr int kFormatVersion = 1;

  int format_version = kFormatVersion;
  std::string command;
  std::string family = "dyson";
  double lambda = 1.0;
  double t = 1.0;
  std::string initial = "dirac:b=0";
  int order = 8;
  int grid = 4096;
  std::vector<double> eps_schedule;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int replicas = 20;
  int particles = 256;
  double dt = 1e-3;
  double beta = 2.0;
  double nu = 0.0;

  json to_json() const;
  static RunManifest from_json(const json& j);
  /// FNV-1a 64-bit hash of the canonical JSON without out_dir, as 16 hex digits.
  std::string hash() const;
};

std::uint64_t fnv1a(std::string_view bytes);

/// Writes a CSV whose first line is "# manifest <hash>".
void write_csv(const std::filesystem::path& path, const std::string& manifest_hash,
               const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows);

/// Writes pretty JSON with a "manifest_hash" member added to objects.
void write_json(const std::filesystem::path& path, const std::string& manifest_hash, json body);

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

}  // namespace freeburgers
