#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "freeburgers/cli.hpp"
#include "freeburgers/evolution.hpp"
#include "freeburgers/io.hpp"
#include "freeburgers/measures.hpp"
#include "freeburgers/sde.hpp"
#include "freeburgers/transforms.hpp"

namespace py = pybind11;
using namespace freeburgers;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

RunManifest manifest(const std::string& family, double lambda, const std::string& initial, double t) {
  RunManifest m;
  m.family = family;
  m.lambda = lambda;
  m.initial = initial;
  m.t = t;
  return m;
}

py::dict diagnostics_dict(const EvolutionDiagnostics& d) {
  py::dict out;
  out["max_residual"] = d.max_residual;
  out["continuation_steps"] = d.continuation_steps;
  out["failures"] = d.failures;
  out["branch_flags"] = d.branch_flags;
  out["raw_mass"] = d.raw_mass;
  out["subordination_residual"] = d.subordination_residual;
  out["min_subordination_imag"] = d.min_subordination_imag;
  return out;
}

py::dict evolve_py(const std::string& family, double lambda, const std::string& initial, double t, int grid,
                   std::vector<double> eps) {
  const RunManifest m = manifest(family, lambda, initial, t);
  const InitialCondition ic = parse_initial(initial);
  const EvolutionProblem problem = problem_from(m, ic);
  const std::vector<double> xs = default_x_grid(problem, t, grid);
  if (eps.empty()) eps.assign(kDefaultEpsSchedule.begin(), kDefaultEpsSchedule.end());
  EvolutionResult r;
  {
    py::gil_scoped_release release;
    r = evolve(problem, t, xs, eps);
  }
  std::vector<double> rho;
  rho.reserve(xs.size());
  for (double x : xs) rho.push_back(r.recovered.density_at(x));
  py::dict out;
  out["x"] = to_array(xs);
  out["rho"] = to_array(rho);
  out["measure"] = r.recovered;
  out["diagnostics"] = diagnostics_dict(r.diagnostics);
  return out;
}

py::dict simulate_py(const std::string& family, double lambda, const std::string& initial, double t, int particles,
                     int replicas, double dt, double beta, std::uint64_t seed) {
  RunManifest m = manifest(family, lambda, initial, t);
  m.particles = particles;
  m.replicas = replicas;
  m.dt = dt;
  m.beta = beta;
  m.seed = seed;
  const SdeConfig config = sde_config_from(m, parse_initial(initial));
  Ensemble ens;
  {
    py::gil_scoped_release release;
    ens = simulate(config);
  }
  py::dict out;
  out["positions"] = ens.positions;
  out["scale"] = hydrodynamic_scale(config);
  out["zero_modes"] = config.zero_modes;
  out["measure"] = hydrodynamic_measure(config, ens);
  return out;
}

int run_cli_py(std::vector<std::string> args) {
  args.insert(args.begin(), "freeburgers");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  py::gil_scoped_release release;
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Free Burgers flows: Cauchy transforms, series laws, evolution and particle systems.";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<MeasureSpec>(m, "Measure")
      .def_property_readonly("atoms",
                             [](const MeasureSpec& mu) {
                               std::vector<std::pair<double, double>> out;
                               for (const Atom& a : mu.atoms()) out.emplace_back(a.location, a.weight);
                               return out;
                             })
      .def_property_readonly("density",
                             [](const MeasureSpec& mu) -> py::object {
                               if (!mu.density()) return py::none();
                               py::dict d;
                               d["lo"] = mu.density()->lo;
                               d["hi"] = mu.density()->hi;
                               d["values"] = to_array(mu.density()->values);
                               return d;
                             })
      .def_property_readonly("domain", [](const MeasureSpec& mu) { return std::string(domain_name(mu.domain())); })
      .def("mass", &MeasureSpec::mass)
      .def("atom_at", &MeasureSpec::atom_at, py::arg("x"))
      .def("density_at", &MeasureSpec::density_at, py::arg("x"))
      .def("cdf", &MeasureSpec::cdf, py::arg("x"))
      .def("support", &MeasureSpec::support)
      .def("moments", [](const MeasureSpec& mu, int order) { return moments(mu, order).values; }, py::arg("order"))
      .def("cumulants", [](const MeasureSpec& mu, int order) { return r_series(mu, order).values; },
           py::arg("order"))
      .def("cauchy", [](const MeasureSpec& mu, cplx z) { return cauchy_eval(mu, z); }, py::arg("z"))
      .def("to_json", [](const MeasureSpec& mu) { return measure_to_json(mu).dump(); })
      .def_static("from_json", [](const std::string& s) { return measure_from_json(json::parse(s)); },
                  py::arg("text"))
      .def("__repr__", [](const MeasureSpec& mu) {
        return "<Measure " + std::string(domain_name(mu.domain())) + ", " + std::to_string(mu.atoms().size()) +
               " atoms" + (mu.density() ? ", density>" : ">");
      });

  m.def("dirac", &make_dirac, py::arg("b") = 0.0);
  m.def("bernoulli", &make_bernoulli, py::arg("a"));
  m.def("semicircle", &make_semicircle, py::arg("t"), py::arg("grid") = kDefaultGridSize);
  m.def("marcenko_pastur", &make_marcenko_pastur, py::arg("lam"), py::arg("t"), py::arg("grid") = kDefaultGridSize);
  m.def("initial", [](const std::string& spec) { return parse_initial(spec).measure; }, py::arg("spec"),
        "Measure from a CLI --initial string.");
  m.def("push_forward_square", &push_forward_square, py::arg("mu"));
  m.def("symmetrize", &symmetrize, py::arg("nu"));
  m.def("ks_distance", &ks_distance, py::arg("a"), py::arg("b"));

  m.def(
      "series_cumulants",
      [](const std::string& family, double lambda, const std::string& initial, double t, int order) {
        const InitialCondition ic = parse_initial(initial);
        const EvolutionProblem problem = problem_from(manifest(family, lambda, initial, t), ic);
        return series_cumulants(problem, ic.measure, t, order).values;
      },
      py::arg("family"), py::arg("lam"), py::arg("initial"), py::arg("t"), py::arg("order") = 8,
      "Free cumulants kappa_1..kappa_order of the evolved measure.");

  m.def(
      "solve",
      [](const std::string& family, double lambda, const std::string& initial, double t, cplx z) {
        const InitialCondition ic = parse_initial(initial);
        const EvolutionProblem problem = problem_from(manifest(family, lambda, initial, t), ic);
        return solve_point(problem, t, z, {}).g;
      },
      py::arg("family"), py::arg("lam"), py::arg("initial"), py::arg("t"), py::arg("z"),
      "Cauchy transform of the evolved measure at z with Im z > 0.");

  m.def("evolve", &evolve_py, py::arg("family"), py::arg("lam"), py::arg("initial"), py::arg("t"),
        py::arg("grid") = 4096, py::arg("eps") = std::vector<double>{},
        "Solves on a grid and recovers the measure. Returns x, rho, measure and diagnostics.");

  m.def("simulate", &simulate_py, py::arg("family"), py::arg("lam"), py::arg("initial"), py::arg("t"),
        py::arg("particles"), py::arg("replicas") = 1, py::arg("dt") = 1e-3, py::arg("beta") = 2.0,
        py::arg("seed") = 0, "Runs the particle system. Returns raw positions and the scaled empirical measure.");

  m.def("run_cli", &run_cli_py, py::arg("args"), "Runs the command line with `args`; returns the exit code.");
}
