#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gmsm/benchmark.hpp"
#include "gmsm/cli.hpp"
#include "gmsm/config.hpp"
#include "gmsm/error.hpp"
#include "gmsm/functionals.hpp"
#include "gmsm/synth.hpp"

namespace py = pybind11;
using namespace gmsm;

namespace {

Direction direction(const std::string& s) {
  if (s == "upper") return Direction::upper;
  if (s == "lower") return Direction::lower;
  throw std::invalid_argument("direction must be 'upper' or 'lower'");
}

TreatmentKind treatment(const std::string& s) {
  if (s == "discrete" || s == "binary") return TreatmentKind::discrete;
  if (s == "continuous") return TreatmentKind::continuous;
  throw std::invalid_argument("treatment must be 'discrete' or 'continuous'");
}

RatioBounds bounds_from(double gamma, double q) { return RatioBounds::from_weighted(gamma, q); }

py::dict bounds_dict(const RatioBounds& rb) {
  py::dict d;
  d["s_minus"] = rb.s_minus;
  d["s_plus"] = rb.s_plus;
  d["c_plus"] = rb.c_plus;
  d["c_minus"] = rb.c_minus;
  d["identity"] = rb.identity();
  return d;
}

// Runs a JSON config through the command layer; returns (exit code, output, log).
py::tuple run_config(const std::string& text) {
  std::ostringstream out, log;
  int code = 0;
  {
    py::gil_scoped_release release;
    try {
      const RunConfig cfg = parse_config(nlohmann::json::parse(text));
      code = cli::run(cfg, out, log);
    } catch (...) {
      code = cli::exit_code_for_current_exception(log);
    }
  }
  return py::make_tuple(code, out.str(), log.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sharp bounds on causal effects under weighted marginal sensitivity models";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("ratio_bounds",
        [](double gamma, double q) { return bounds_dict(bounds_from(gamma, q)); },
        py::arg("gamma"), py::arg("q") = 0.0,
        "Density-ratio bounds and shift quantiles of a weighted model.");
  m.def("ratio_bounds_explicit",
        [](double s_minus, double s_plus) {
          return bounds_dict(RatioBounds::from_ratios(s_minus, s_plus));
        },
        py::arg("s_minus"), py::arg("s_plus"));

  m.def("shift_discrete",
        [](std::vector<double> support, std::vector<double> probs, double gamma, double q,
           const std::string& dir) {
          const DiscreteDist d(std::move(support), std::move(probs));
          const DiscreteDist s = shift_discrete(d, bounds_from(gamma, q), direction(dir));
          return py::make_tuple(std::vector<double>(s.support().begin(), s.support().end()),
                                std::vector<double>(s.probs().begin(), s.probs().end()));
        },
        py::arg("support"), py::arg("probs"), py::arg("gamma"), py::arg("q") = 0.0,
        py::arg("direction") = "upper", "Maximally shifted pmf; returns (support, probs).");

  m.def("expectation_bound",
        [](std::vector<double> sample, double gamma, double q, const std::string& dir) {
          const SampleDist s = SampleDist::from_unsorted(std::move(sample));
          return expectation_bound_sampled(s, bounds_from(gamma, q), direction(dir));
        },
        py::arg("sample"), py::arg("gamma"), py::arg("q") = 0.0, py::arg("direction") = "upper");

  m.def("quantile_bound",
        [](std::vector<double> sample, double alpha, double gamma, double q,
           const std::string& dir) {
          const SampleDist s = SampleDist::from_unsorted(std::move(sample));
          const auto r = quantile_bound_sampled(s, bounds_from(gamma, q), alpha, direction(dir));
          return py::make_tuple(r.value, r.capped);
        },
        py::arg("sample"), py::arg("alpha"), py::arg("gamma"), py::arg("q") = 0.0,
        py::arg("direction") = "upper", "Returns (value, capped).");

  m.def("simulate",
        [](const std::string& preset, const std::string& kind, std::size_t n,
           std::uint64_t seed) {
          ScmConfig cfg = ScmConfig::preset(preset, treatment(kind));
          cfg.seed = seed;
          Dataset d;
          {
            py::gil_scoped_release release;
            d = sample_dataset(cfg, n);
          }
          py::dict out;
          out["x"] = d.x;
          out["a"] = d.a;
          out["m1"] = d.m1;
          out["m2"] = d.m2;
          out["y"] = d.y;
          out["u_m1"] = d.u_m1;
          out["u_m2"] = d.u_m2;
          out["u_y"] = d.u_y;
          return out;
        },
        py::arg("preset"), py::arg("treatment"), py::arg("n"), py::arg("seed") = 0,
        "Columns of a synthetic sample, hidden confounders included.");

  m.def("oracle_gamma",
        [](const std::string& preset, const std::string& kind, const std::string& node, double x,
           double a) {
          return oracle_gamma(ScmConfig::preset(preset, treatment(kind)), node, x, a).gamma_star;
        },
        py::arg("preset"), py::arg("treatment"), py::arg("node"), py::arg("x"), py::arg("a"));

  m.def("oracle_effect",
        [](const std::string& preset, const std::string& kind, double x,
           std::vector<double> treatments, std::size_t n_mc, std::uint64_t seed) {
          CausalQuery q;
          q.x = {x};
          q.treatments = std::move(treatments);
          for (std::size_t i = 1; i < q.treatments.size(); ++i) {
            q.mediators.push_back("M" + std::to_string(i));
          }
          py::gil_scoped_release release;
          return oracle_effect(ScmConfig::preset(preset, treatment(kind)), q, n_mc, seed);
        },
        py::arg("preset"), py::arg("treatment"), py::arg("x"), py::arg("treatments"),
        py::arg("n_mc") = 1'000'000, py::arg("seed") = 0);

  m.def("run", &run_config, py::arg("config_json"),
        "Runs a JSON run configuration; returns (exit_code, output, log).");

  m.def("config_hash",
        [](const std::string& text) { return parse_config(nlohmann::json::parse(text)).hash; },
        py::arg("config_json"));
}
