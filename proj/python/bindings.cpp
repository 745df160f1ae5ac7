#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "phenocast/cli.hpp"
#include "phenocast/climate.hpp"
#include "phenocast/error.hpp"
#include "phenocast/estimate.hpp"
#include "phenocast/evaluate.hpp"
#include "phenocast/predict.hpp"
#include "phenocast/serialize.hpp"

namespace py = pybind11;
using namespace phenocast;

namespace {

std::vector<YearPanel> load(const std::string& bloom, const std::string& temp) {
  return build_panels(load_temperature(temp), load_bloom(bloom));
}

ParamVector params_from(Family family, double a, const std::vector<double>& b, std::optional<double> gamma,
                        double t_base) {
  ParamVector p{a, b, gamma, t_base};
  p.validate(family);
  return p;
}

}  // namespace

PYBIND11_MODULE(_phenocast, m) {
  m.doc() = "Discrete-time hazard models for bloom-date prediction";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ComputationError>(m, "ComputationError", PyExc_RuntimeError);

  m.def(
      "fit",
      [](const std::string& family, const std::string& bloom, const std::string& temp, bool fast) {
        const auto panels = load(bloom, temp);
        return to_json(fit({parse_family(family)}, panels, fast ? SearchConfig::fast() : SearchConfig{}), false);
      },
      py::arg("family"), py::arg("bloom"), py::arg("temp"), py::arg("fast") = false,
      "Fits one family to CSV inputs; returns the model as JSON text.");

  m.def(
      "log_likelihood",
      [](const std::string& family, const std::vector<std::tuple<int, std::vector<double>, int, bool>>& years,
         double a, const std::vector<double>& b, std::optional<double> gamma, double t_base) {
        const Family f = parse_family(family);
        std::vector<YearPanel> panels;
        for (const auto& [year, tavg, day, censored] : years)
          panels.emplace_back(year, tavg, censored ? BloomRecord::censored_at(year, day) : BloomRecord::observed(year, day));
        return log_likelihood({f}, panels, params_from(f, a, b, gamma, t_base));
      },
      py::arg("family"), py::arg("years"), py::arg("a"), py::arg("b"), py::arg("gamma") = py::none(),
      py::arg("t_base"), "years: list of (year, tavg, day, censored).");

  m.def(
      "hazard_mass",
      [](const std::string& family, const std::vector<double>& tavg, double a, const std::vector<double>& b,
         std::optional<double> gamma, double t_base) {
        const Family f = parse_family(family);
        const auto mass = event_mass(hazard_path({f}, tavg, params_from(f, a, b, gamma, t_base)));
        return py::make_tuple(mass.mass, mass.tail);
      },
      py::arg("family"), py::arg("tavg"), py::arg("a"), py::arg("b"), py::arg("gamma") = py::none(), py::arg("t_base"),
      "Event-day mass function along one temperature path, and the mass beyond it.");

  m.def(
      "simulate_arma",
      [](const std::vector<double>& ar, const std::vector<double>& ma, double sigma2, std::size_t n,
         std::uint64_t seed) { return simulate_stationary(ArmaModel{ar, ma, 0, sigma2}, n, seed); },
      py::arg("ar"), py::arg("ma"), py::arg("sigma2"), py::arg("n"), py::arg("seed") = 0);

  m.def(
      "fit_arma",
      [](const std::vector<double>& x, int p, int d, int q) { return to_json(fit_arma(x, {p, d, q})); },
      py::arg("x"), py::arg("p"), py::arg("d"), py::arg("q"));

  m.def(
      "predict",
      [](const std::string& model_json, const std::string& temp, int year, int day, int n_paths,
         std::uint64_t seed, double alpha) {
        const auto fitted = fitted_model_from_json(model_json);
        const auto series = load_temperature(temp);
        std::vector<double> observed;
        if (day > 0) observed = series.year_tavg(year, day);
        const auto profile = SeasonalProfile::okanagan_like();
        auto history = series.tavg_before(make_date(year, 1, 1), 30);
        for (std::size_t k = 0; k < history.size(); ++k)
          history[k] -= profile.at(add_days(make_date(year, 1, 1), -static_cast<long long>(history.size() - k)));
        auto ctx = make_context(fitted, year, observed,
                                ClimateDriver{ArmaModel::okanagan_arma31(), profile, history, 1.0}, n_paths, seed);
        const auto dist = predictive_distribution(ctx);
        const auto summary = point_and_interval(dist, alpha);
        return to_json(dist, &summary);
      },
      py::arg("model_json"), py::arg("temp"), py::arg("year"), py::arg("day"), py::arg("n_paths") = 1000,
      py::arg("seed") = 0, py::arg("alpha") = 0.05,
      "Predictive distribution with the built-in climate model; returns JSON text.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the phenocast command line in-process; returns (status, stdout, stderr).");
}
