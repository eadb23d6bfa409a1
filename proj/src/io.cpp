#include "freeburgers/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "freeburgers/error.hpp"

namespace freeburgers {

std::string_view domain_name(DomainTag tag) {
  switch (tag) {
    case DomainTag::real_line: return "real";
    case DomainTag::nonneg_halfline: return "nonneg";
    case DomainTag::symmetric: return "symmetric";
  }
  return "real";
}

DomainTag parse_domain(std::string_view name) {
  if (name == "real") return DomainTag::real_line;
  if (name == "nonneg") return DomainTag::nonneg_halfline;
  if (name == "symmetric") return DomainTag::symmetric;
  throw Error(ErrorCode::invalid_input, "unknown domain '" + std::string(name) + "'");
}

MeasureSpec measure_from_json(const json& j) {
  try {
    std::vector<Atom> atoms;
    if (j.contains("atoms")) {
      for (const auto& a : j.at("atoms")) {
        if (!a.is_array() || a.size() != 2) throw Error(ErrorCode::invalid_input, "atoms must be [x, w] pairs");
        atoms.push_back({a[0].get<double>(), a[1].get<double>()});
      }
    }
    std::optional<DensityGrid> density;
    if (j.contains("density") && !j.at("density").is_null()) {
      const json& d = j.at("density");
      DensityGrid g;
      g.lo = d.at("lo").get<double>();
      g.hi = d.at("hi").get<double>();
      g.values = d.at("values").get<std::vector<double>>();
      density = std::move(g);
    }
    const DomainTag tag = parse_domain(j.value("domain", std::string("real")));
    return MeasureSpec::create(std::move(atoms), std::move(density), tag);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("malformed measure JSON: ") + e.what());
  }
}

json measure_to_json(const MeasureSpec& mu) {
  json j;
  j["atoms"] = json::array();
  for (const Atom& a : mu.atoms()) j["atoms"].push_back({a.location, a.weight});
  if (mu.density()) {
    j["density"] = {{"lo", mu.density()->lo}, {"hi", mu.density()->hi}, {"values", mu.density()->values}};
  }
  j["domain"] = domain_name(mu.domain());
  return j;
}

namespace {

std::map<std::string, double> parse_params(std::string_view text, std::string_view spec) {
  std::map<std::string, double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::invalid_input, "expected key=value in '" + std::string(spec) + "'");
    }
    const std::string key(item.substr(0, eq));
    const std::string_view value = item.substr(eq + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw Error(ErrorCode::invalid_input, "bad number '" + std::string(value) + "' in '" + std::string(spec) + "'");
    }
    out[key] = v;
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

double take(std::map<std::string, double>& params, const std::string& key, std::string_view spec,
            std::optional<double> fallback = std::nullopt) {
  const auto it = params.find(key);
  if (it == params.end()) {
    if (fallback) return *fallback;
    throw Error(ErrorCode::invalid_input, "missing '" + key + "' in '" + std::string(spec) + "'");
  }
  const double v = it->second;
  params.erase(it);
  return v;
}

}  // namespace

InitialCondition parse_initial(std::string_view spec, int grid_size) {
  const auto colon = spec.find(':');
  const std::string kind(spec.substr(0, colon));
  const bool shorthand = kind == "dirac" || kind == "bernoulli" || kind == "semicircle" || kind == "mp";
  if (shorthand) {
    auto params = parse_params(colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1), spec);
    InitialCondition ic{make_dirac(0.0), dirac_field(0.0), ""};
    if (kind == "dirac") {
      const double b = take(params, "b", spec, 0.0);
      ic = {make_dirac(b), dirac_field(b), "dirac:b=" + format_number(b)};
      if (b == 0.0) ic.square_field = dirac_field(0.0);
    } else if (kind == "bernoulli") {
      const double a = take(params, "a", spec);
      ic = {make_bernoulli(a), bernoulli_field(a), "bernoulli:a=" + format_number(a), dirac_field(a * a)};
    } else if (kind == "semicircle") {
      const double t = take(params, "t", spec);
      ic = {make_semicircle(t, grid_size), semicircle_field(t), "semicircle:t=" + format_number(t),
            marcenko_pastur_field(1.0, t)};
    } else {
      const double lambda = take(params, "lambda", spec);
      const double t = take(params, "t", spec, 1.0);
      ic = {make_marcenko_pastur(lambda, t, grid_size), marcenko_pastur_field(lambda, t),
            "mp:lambda=" + format_number(lambda) + ",t=" + format_number(t)};
    }
    if (!params.empty()) {
      throw Error(ErrorCode::invalid_input, "unknown parameter '" + params.begin()->first + "' in '" + std::string(spec) + "'");
    }
    return ic;
  }
  const std::filesystem::path path{std::string(spec)};
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_input, "cannot read initial measure '" + std::string(spec) + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("malformed measure JSON: ") + e.what());
  }
  MeasureSpec mu = measure_from_json(j);
  CauchyField field = quadrature_field(mu);
  return {std::move(mu), std::move(field), path.string(), std::nullopt};
}

json RunManifest::to_json() const {
  return {{"format_version", format_version},
          {"command", command},
          {"family", family},
          {"lambda", lambda},
          {"t", t},
          {"initial", initial},
          {"order", order},
          {"grid", grid},
          {"eps_schedule", eps_schedule},
          {"out_dir", out_dir},
          {"sde",
           {{"seed", seed},
            {"replicas", replicas},
            {"particles", particles},
            {"dt", dt},
            {"beta", beta},
            {"nu", nu}}}};
}

RunManifest RunManifest::from_json(const json& j) {
  try {
    RunManifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kFormatVersion) {
      throw Error(ErrorCode::invalid_input, "unsupported manifest format " + std::to_string(m.format_version));
    }
    m.command = j.at("command").get<std::string>();
    m.family = j.at("family").get<std::string>();
    m.lambda = j.at("lambda").get<double>();
    m.t = j.at("t").get<double>();
    m.initial = j.at("initial").get<std::string>();
    m.order = j.at("order").get<int>();
    m.grid = j.at("grid").get<int>();
    m.eps_schedule = j.at("eps_schedule").get<std::vector<double>>();
    m.out_dir = j.at("out_dir").get<std::string>();
    const json& s = j.at("sde");
    m.seed = s.at("seed").get<std::uint64_t>();
    m.replicas = s.at("replicas").get<int>();
    m.particles = s.at("particles").get<int>();
    m.dt = s.at("dt").get<double>();
    m.beta = s.at("beta").get<double>();
    m.nu = s.at("nu").get<double>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("malformed manifest: ") + e.what());
  }
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string RunManifest::hash() const {
  json j = to_json();
  j.erase("out_dir");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_csv(const std::filesystem::path& path, const std::string& manifest_hash,
               const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::invalid_input, "cannot write " + path.string());
  out << "# manifest " << manifest_hash << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

void write_json(const std::filesystem::path& path, const std::string& manifest_hash, json body) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::invalid_input, "cannot write " + path.string());
  if (body.is_object()) body["manifest_hash"] = manifest_hash;
  out << body.dump(2) << '\n';
}

}  // namespace freeburgers
