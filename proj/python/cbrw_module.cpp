#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cbrw/calibrate.hpp"
#include "cbrw/commands.hpp"
#include "cbrw/engine.hpp"
#include "cbrw/errors.hpp"
#include "cbrw/expectation_dp.hpp"
#include "cbrw/multi_catalyst.hpp"
#include "cbrw/rng.hpp"

namespace py = pybind11;
using namespace cbrw;

namespace {

OffspringLaw law_from(const std::string& kind, const std::vector<double>& args) {
  if (kind == "deterministic" && args.size() == 1)
    return OffspringLaw::deterministic(static_cast<long>(args[0]));
  if (kind == "poisson" && args.size() == 1) return OffspringLaw::poisson(args[0]);
  if (kind == "binomial" && args.size() == 2)
    return OffspringLaw::binomial(static_cast<long>(args[0]), args[1]);
  if (kind == "geometric" && args.size() == 1)
    return OffspringLaw::geometric(args[0]);
  if (kind == "empirical" && !args.empty()) return OffspringLaw::empirical(args);
  throw ValidationError("offspring law: unknown kind or wrong parameter count");
}

ModelSpec make_model(const std::vector<std::pair<int, double>>& walk,
                     const std::vector<std::tuple<int, std::string,
                                                  std::vector<double>>>& cats,
                     int initial) {
  std::vector<int> sites;
  std::vector<OffspringLaw> laws;
  for (const auto& [site, kind, args] : cats) {
    sites.push_back(site);
    laws.push_back(law_from(kind, args));
  }
  return ModelSpec(StepLaw(walk), std::move(sites), std::move(laws), initial);
}

}  // namespace

PYBIND11_MODULE(_cbrwlab, m) {
  m.doc() = "catalytic branching random walk: calibration, ensembles, checks";

  py::register_exception<Error>(m, "CbrwError");

  py::class_<ModelSpec>(m, "Model")
      .def(py::init(&make_model), py::arg("walk"), py::arg("catalysts"),
           py::arg("initial") = 0)
      .def_property_readonly("catalysts",
                             [](const ModelSpec& s) { return s.catalysts; })
      .def("m1", &ModelSpec::m1, py::arg("x"))
      .def("m2", &ModelSpec::m2, py::arg("x"));

  py::class_<DerivedParams>(m, "DerivedParams")
      .def_readonly("r", &DerivedParams::r)
      .def_readonly("t0", &DerivedParams::t0)
      .def_readonly("alpha", &DerivedParams::alpha)
      .def_readonly("m", &DerivedParams::m)
      .def_readonly("period", &DerivedParams::period)
      .def_readonly("malthus_residual", &DerivedParams::malthus_residual)
      .def_readonly("c0_series", &DerivedParams::c0_series)
      .def_readonly("c0_renewal", &DerivedParams::c0_renewal)
      .def_readonly("extinction", &DerivedParams::extinction_s)
      .def_readonly("survival", &DerivedParams::survival)
      .def("phi", [](const DerivedParams& p, int x) { return (*p.phi)(x); },
           py::arg("x"))
      .def("c_star",
           [](const DerivedParams& p) {
             py::dict d;
             if (p.c_star) {
               d["series"] = p.c_star->series;
               d["closed_a"] = p.c_star->closed_a;
               d["closed_b"] = p.c_star->closed_b;
               d["renewal"] = p.c_star->renewal;
             }
             return d;
           })
      .def("manifest", &DerivedParams::manifest_lines);

  m.def(
      "derive",
      [](const ModelSpec& model, std::uint64_t seed) {
        DeriveOptions opts;
        Rng rng(seed, 0);
        return derive_params(model, opts, rng);
      },
      py::arg("model"), py::arg("seed") = 1,
      "Full single-catalyst calibration bundle.");

  py::class_<LlnSummary>(m, "LlnSummary")
      .def_readonly("n", &LlnSummary::n)
      .def_readonly("survivors", &LlnSummary::survivors)
      .def_readonly("survival_rate", &LlnSummary::survival_rate)
      .def_readonly("se_survival", &LlnSummary::se_survival)
      .def_readonly("mean_speed", &LlnSummary::mean_speed)
      .def_readonly("se_speed", &LlnSummary::se_speed)
      .def_readonly("mean_lambda", &LlnSummary::mean_lambda)
      .def_readonly("se_lambda", &LlnSummary::se_lambda);

  m.def(
      "run_lln",
      [](const ModelSpec& model, const std::vector<int>& times, long replicas,
         std::uint64_t seed, double cap, int threads) {
        DeriveOptions opts;
        Rng rng(seed, 0);
        DerivedParams params = derive_params(model, opts, rng);
        EnsembleSpec es;
        es.times = times;
        es.replicas = replicas;
        es.seed = seed;
        es.cap = cap;
        es.threads = threads;
        EnsembleResult res = run_ensemble(model, *params.phi, params.r, es);
        std::vector<LlnSummary> out;
        for (std::size_t ti = 0; ti < times.size(); ++ti)
          out.push_back(summarize_lln(res, ti, params.r));
        return out;
      },
      py::arg("model"), py::arg("times"), py::arg("replicas"), py::arg("seed"),
      py::arg("cap") = 1e300, py::arg("threads") = 1,
      "Ensemble run with per-time aggregates.");

  m.def(
      "expectation_profile",
      [](const ModelSpec& model, int n) {
        ExpectationTable table(model, n);
        py::dict d;
        std::vector<std::pair<int, double>> row;
        for (int x = -n; x <= n; ++x) {
          const double v = table.at(n, x);
          if (v > 0.0) row.emplace_back(x, v);
        }
        d["row"] = row;
        d["total"] = table.total(n);
        return d;
      },
      py::arg("model"), py::arg("n"),
      "Exact per-site expected counts at generation n.");

  m.def(
      "many_to_one_gap",
      [](const ModelSpec& model, int n) {
        ExpectationTable table(model, n);
        const double lhs = table.total(n);
        const double rhs = weighted_walk_expectation(model, n,
                                                     [](int) { return 1.0; });
        return std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
      },
      py::arg("model"), py::arg("n"),
      "Relative gap between the particle-sum and weighted-walk recursions.");

  m.def(
      "multicat_calibrate",
      [](const ModelSpec& model) {
        MultiCalibration calib = solve_malthusian_multi(model);
        py::dict d;
        d["r"] = calib.r;
        d["t0"] = calib.t0;
        d["alpha"] = calib.alpha;
        d["rho_residual"] = calib.rho_residual;
        d["eigen_residual"] = calib.eig.residual;
        d["v"] = calib.eig.v;
        d["sites"] = calib.matrix.sites;
        return d;
      },
      py::arg("model"), "Perron calibration over the catalyst set.");

  m.def(
      "run_experiment",
      [](const std::string& config_path) {
        std::ostringstream os;
        int code = run_experiment(config_path, RunOverrides{}, os);
        return py::make_tuple(code, os.str());
      },
      py::arg("config_path"),
      "Run a config file exactly like the cbrw binary; returns (exit_code, log).");
}
