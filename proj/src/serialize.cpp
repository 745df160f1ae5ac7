#include "phenocast/serialize.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "phenocast/error.hpp"

namespace phenocast {

using json = nlohmann::ordered_json;

namespace {

json params_json(const ParamVector& p, Family family) {
  json j;
  j["a"] = p.a;
  j["b"] = p.b;
  if (p.gamma) j["gamma"] = *p.gamma;
  j["t_base"] = p.t_base;
  j["names"] = ParamVector::names(family);
  j["values"] = p.flatten();
  return j;
}

ParamVector params_from(const json& j, Family family) {
  ParamVector p;
  p.a = j.at("a").get<double>();
  p.b = j.at("b").get<std::vector<double>>();
  if (j.contains("gamma") && !j.at("gamma").is_null()) p.gamma = j.at("gamma").get<double>();
  p.t_base = j.at("t_base").get<double>();
  p.validate(family);
  return p;
}

json grid_json(const GridRange& g) { return json{{"lo", g.lo}, {"hi", g.hi}, {"step", g.step}}; }

GridRange grid_from(const json& j) {
  return GridRange{j.at("lo").get<double>(), j.at("hi").get<double>(), j.at("step").get<double>()};
}

json search_json(const SearchConfig& s) {
  return json{{"t_base", grid_json(s.t_base)},
              {"gamma", grid_json(s.gamma)},
              {"tbase_stride", s.tbase_stride},
              {"refine_peaks", s.refine_peaks},
              {"joint_tbase_stride", s.joint_tbase_stride},
              {"joint_gamma_stride", s.joint_gamma_stride},
              {"refine", s.refine},
              {"max_iterations", s.max_iterations},
              {"gradient_tolerance", s.gradient_tolerance}};
}

json fitted_json(const FittedModel& m, bool include_trace) {
  json j;
  j["spec"] = {{"family", to_string(m.spec.family)}, {"link", "logit"}, {"parameter_count", m.spec.parameter_count()}};
  j["params"] = params_json(m.params, m.spec.family);
  j["loglik"] = m.loglik;
  j["n_years"] = m.n_years;
  j["bic"] = m.bic;
  j["weakly_identified"] = m.weakly_identified;
  j["degenerate"] = m.degenerate;
  j["nonconverged_points"] = m.nonconverged_points;
  if (include_trace) {
    json trace = json::array();
    for (const auto& t : m.trace)
      trace.push_back({{"t_base", t.t_base}, {"gamma", t.gamma}, {"loglik", t.loglik}, {"converged", t.converged},
                       {"iterations", t.iterations}});
    j["trace"] = std::move(trace);
  }
  return j;
}

json summary_json(const ParameterSummary& s) {
  return json{{"name", s.name},         {"mean", s.mean}, {"standard_error", s.standard_error},
              {"ci_lower", s.ci_lower}, {"ci_upper", s.ci_upper}, {"min", s.min},
              {"max", s.max}};
}

json arma_json(const ArmaModel& m) {
  const auto o = m.order();
  return json{{"order", {{"p", o.p}, {"d", o.d}, {"q", o.q}}}, {"ar", m.ar}, {"ma", m.ma}, {"d", m.d},
              {"sigma2", m.sigma2}};
}

json series_summary_json(const SeriesSummary& s) {
  return json{{"n", s.n}, {"mean", s.mean}, {"variance", s.variance}, {"min", s.min}, {"max", s.max}};
}

json errors_json(const PointErrors& e) { return json{{"mode", e.mode}, {"median", e.median}, {"mean", e.mean}}; }

json interval_json(const IntervalBaseline& b) {
  return json{{"lower", b.lower},
              {"upper", b.upper},
              {"length", b.length},
              {"coverage_in_sample", b.coverage_in_sample},
              {"coverage_loo", b.coverage_loo}};
}

json bootstrap_json(const BootstrapSummary& s) {
  json j;
  j["spec"] = {{"family", to_string(s.spec.family)}, {"link", "logit"}};
  j["requested"] = s.requested;
  j["failed"] = s.failed;
  j["alpha"] = s.alpha;
  j["seed"] = s.seed;
  json params = json::array();
  for (const auto& p : s.parameters) params.push_back(summary_json(p));
  j["parameters"] = std::move(params);
  json reps = json::array();
  for (const auto& r : s.replicates) reps.push_back(r.flatten());
  j["replicates"] = std::move(reps);
  return j;
}

json parse(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what());
  }
}

template <typename F>
auto schema_guard(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("JSON schema violation: ") + e.what());
  }
}

}  // namespace

std::string format_double(double value) {
  if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string to_json(const ParamVector& params, Family family) { return params_json(params, family).dump(2); }
std::string to_json(const SearchConfig& search) { return search_json(search).dump(2); }
std::string to_json(const FittedModel& model, bool include_trace) { return fitted_json(model, include_trace).dump(2); }

std::string to_json(std::span<const RankedModel> ranking) {
  json arr = json::array();
  int rank = 1;
  for (const auto& r : ranking) {
    json j{{"rank", rank++}, {"family", to_string(r.spec.family)}, {"parameter_count", r.spec.parameter_count()}};
    if (r.fitted) {
      j["bic"] = r.fitted->bic;
      j["loglik"] = r.fitted->loglik;
      j["params"] = params_json(r.fitted->params, r.spec.family);
      j["weakly_identified"] = r.fitted->weakly_identified;
    } else {
      j["error"] = r.error;
    }
    arr.push_back(std::move(j));
  }
  return json{{"ranking", std::move(arr)}}.dump(2);
}

std::string to_json(const BootstrapSummary& summary) { return bootstrap_json(summary).dump(2); }
std::string to_json(const ArmaModel& model) { return arma_json(model).dump(2); }

std::string to_json(const ArmaFit& fit) {
  json j = arma_json(fit.model);
  j["css"] = fit.css;
  j["n_effective"] = fit.n_effective;
  j["loglik"] = fit.loglik;
  j["bic"] = fit.bic;
  json cands = json::array();
  for (const auto& c : fit.candidates) {
    json cj{{"p", c.order.p}, {"d", c.order.d}, {"q", c.order.q}, {"valid", c.valid}};
    if (c.valid) {
      cj["bic"] = c.bic;
      cj["sigma2"] = c.sigma2;
    }
    cands.push_back(std::move(cj));
  }
  j["candidates"] = std::move(cands);
  return j.dump(2);
}

std::string to_json(const PredictiveDistribution& dist, const PointSummary* summary) {
  json j{{"year", dist.year},
         {"first_day", dist.first_day},
         {"last_day", dist.last_day()},
         {"tail", dist.tail},
         {"total", dist.total()},
         {"n_paths", dist.n_paths},
         {"seed", dist.seed},
         {"oracle", dist.oracle},
         {"tail_warning", dist.tail_warning},
         {"history_padded", dist.history_padded}};
  if (summary) {
    j["mean"] = summary->mean;
    j["median"] = summary->median;
    j["mode"] = summary->mode;
    j["alpha"] = summary->alpha;
    j["pi"] = {summary->lower, summary->upper};
    j["pi_length"] = summary->pi_length();
  }
  return j.dump(2);
}

std::string to_json(const CvReport& r) {
  json lag = json::array();
  for (const auto& p : r.lag_curve)
    lag.push_back({{"lag", p.lag}, {"count", p.count}, {"mae_median", p.mae_median},
                   {"mean_pi_length", p.mean_pi_length}});
  return json{{"n_years", r.n_years},
              {"n_predictions", r.n_predictions},
              {"rmse", errors_json(r.rmse)},
              {"mae", errors_json(r.mae)},
              {"coverage", r.coverage},
              {"mean_pi_length", r.mean_pi_length},
              {"skipped_years", r.skipped_years},
              {"warnings", r.warnings},
              {"lag_curve", std::move(lag)}}
      .dump(2);
}

std::string to_json(const SimStudyReport& r) {
  json sizes = json::array();
  for (const auto& s : r.sizes) {
    json est = json::array();
    for (const auto& e : s.estimates) est.push_back(e.flatten());
    sizes.push_back({{"size", s.size},
                     {"replicates", s.replicates},
                     {"failed", s.failed},
                     {"names", s.names},
                     {"mean", s.mean},
                     {"standard_error", s.standard_error},
                     {"variance", s.variance},
                     {"replicate_index", s.replicate_index},
                     {"estimates", std::move(est)}});
  }
  return json{{"truth", params_json(r.truth, Family::agdd)},
              {"requested", r.requested},
              {"seed", r.seed},
              {"sizes", std::move(sizes)}}
      .dump(2);
}

std::string to_json(const NaiveBaselines& b) {
  return json{{"n_years", b.n_years}, {"mean", b.mean},  {"sd", b.sd},   {"normal", interval_json(b.normal)},
              {"quantile", interval_json(b.quantile)}, {"min", b.min}, {"max", b.max}, {"range", b.range}}
      .dump(2);
}

std::string to_json(const CiValidityReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json boot = bootstrap_json(row.bootstrap);
    boot.erase("replicates");
    rows.push_back({{"size", row.size},
                    {"day", row.day},
                    {"true_probability", row.true_probability},
                    {"simulation_ci", {row.sim_lower, row.sim_upper}},
                    {"bootstrap_ci", {row.boot_lower, row.boot_upper}},
                    {"sim_replicates", row.sim_replicates},
                    {"boot_replicates", row.boot_replicates},
                    {"bootstrap", std::move(boot)}});
  }
  return json{{"rows", std::move(rows)}}.dump(2);
}

std::string to_json(const Diagnostics& d) {
  return json{{"max_lag", d.max_lag},
              {"observed", series_summary_json(d.observed)},
              {"simulated", series_summary_json(d.simulated)}}
      .dump(2);
}

FittedModel fitted_model_from_json(std::string_view text) {
  const json j = parse(text);
  return schema_guard([&] {
    FittedModel m;
    m.spec.family = parse_family(j.at("spec").at("family").get<std::string>());
    m.params = params_from(j.at("params"), m.spec.family);
    m.loglik = j.at("loglik").get<double>();
    m.n_years = j.at("n_years").get<int>();
    m.bic = j.at("bic").get<double>();
    m.weakly_identified = j.value("weakly_identified", false);
    m.degenerate = j.value("degenerate", false);
    m.nonconverged_points = j.value("nonconverged_points", 0);
    if (j.contains("trace"))
      for (const auto& t : j.at("trace"))
        m.trace.push_back({t.at("t_base").get<double>(), t.at("gamma").get<double>(), t.at("loglik").get<double>(),
                           t.at("converged").get<bool>(), t.at("iterations").get<int>()});
    return m;
  });
}

BootstrapSummary bootstrap_from_json(std::string_view text) {
  const json j = parse(text);
  return schema_guard([&] {
    BootstrapSummary s;
    s.spec.family = parse_family(j.at("spec").at("family").get<std::string>());
    s.requested = j.at("requested").get<int>();
    s.failed = j.at("failed").get<int>();
    s.alpha = j.at("alpha").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& p : j.at("parameters"))
      s.parameters.push_back({p.at("name").get<std::string>(), p.at("mean").get<double>(),
                              p.at("standard_error").get<double>(), p.at("ci_lower").get<double>(),
                              p.at("ci_upper").get<double>(), p.at("min").get<double>(), p.at("max").get<double>()});
    for (const auto& r : j.at("replicates"))
      s.replicates.push_back(ParamVector::unflatten(s.spec.family, r.get<std::vector<double>>()));
    return s;
  });
}

ArmaModel arma_model_from_json(std::string_view text) {
  const json j = parse(text);
  return schema_guard([&] {
    ArmaModel m;
    m.ar = j.at("ar").get<std::vector<double>>();
    m.ma = j.at("ma").get<std::vector<double>>();
    m.d = j.at("d").get<int>();
    m.sigma2 = j.at("sigma2").get<double>();
    m.validate();
    return m;
  });
}

SearchConfig search_config_from_json(std::string_view text) {
  const json j = parse(text);
  return schema_guard([&] {
    SearchConfig s;
    s.t_base = grid_from(j.at("t_base"));
    s.gamma = grid_from(j.at("gamma"));
    s.tbase_stride = j.at("tbase_stride").get<int>();
    s.refine_peaks = j.at("refine_peaks").get<int>();
    s.joint_tbase_stride = j.at("joint_tbase_stride").get<int>();
    s.joint_gamma_stride = j.at("joint_gamma_stride").get<int>();
    s.refine = j.at("refine").get<bool>();
    s.max_iterations = j.at("max_iterations").get<int>();
    s.gradient_tolerance = j.at("gradient_tolerance").get<double>();
    return s;
  });
}

// ---------------------------------------------------------------------------

void write_paths_csv(std::ostream& out, std::span<const std::vector<double>> paths, int first_day) {
  out << "path_id,day,tavg\n";
  for (std::size_t l = 0; l < paths.size(); ++l)
    for (std::size_t k = 0; k < paths[l].size(); ++k)
      out << l << ',' << first_day + static_cast<int>(k) << ',' << format_double(paths[l][k]) << '\n';
}

void write_distribution_csv(std::ostream& out, const PredictiveDistribution& dist) {
  out << "day,mass\n";
  for (std::size_t k = 0; k < dist.mass.size(); ++k)
    out << dist.first_day + static_cast<int>(k) << ',' << format_double(dist.mass[k]) << '\n';
}

void write_band_csv(std::ostream& out, const ConfidenceBand& band) {
  out << "day,point,lower,upper\n";
  for (std::size_t k = 0; k < band.point.size(); ++k)
    out << band.first_day + static_cast<int>(k) << ',' << format_double(band.point[k]) << ','
        << format_double(band.lower[k]) << ',' << format_double(band.upper[k]) << '\n';
}

void write_acf_csv(std::ostream& out, const Diagnostics& d) {
  out << "lag,acf_observed,pacf_observed,acf_simulated,pacf_simulated\n";
  for (std::size_t k = 0; k < d.acf_observed.size(); ++k)
    out << k << ',' << format_double(d.acf_observed[k]) << ',' << format_double(d.pacf_observed[k]) << ','
        << format_double(d.acf_simulated[k]) << ',' << format_double(d.pacf_simulated[k]) << '\n';
}

void write_predictions_csv(std::ostream& out, std::span<const CvPrediction> predictions, bool header) {
  if (header) out << "year,current_day,lag,true_day,mean,median,mode,lower,upper,tail,covered\n";
  for (const auto& p : predictions)
    out << p.year << ',' << p.current_day << ',' << p.lag << ',' << p.true_day << ',' << format_double(p.mean) << ','
        << p.median << ',' << p.mode << ',' << p.lower << ',' << p.upper << ',' << format_double(p.tail) << ','
        << (p.covered ? 1 : 0) << '\n';
}

std::vector<CvPrediction> parse_predictions_csv(std::string_view text) {
  std::vector<CvPrediction> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (number == 1 || line.empty()) continue;
    std::istringstream row(line);
    std::string f[11];
    for (auto& cell : f)
      if (!std::getline(row, cell, ',')) throw ParseError(number, "prediction row needs 11 fields");
    try {
      CvPrediction p;
      p.year = std::stoi(f[0]);
      p.current_day = std::stoi(f[1]);
      p.lag = std::stoi(f[2]);
      p.true_day = std::stoi(f[3]);
      p.mean = std::stod(f[4]);
      p.median = std::stoi(f[5]);
      p.mode = std::stoi(f[6]);
      p.lower = std::stoi(f[7]);
      p.upper = std::stoi(f[8]);
      p.tail = std::stod(f[9]);
      p.covered = f[10] == "1";
      out.push_back(p);
    } catch (const std::logic_error&) {
      throw ParseError(number, "malformed prediction row");
    }
  }
  return out;
}

void write_lag_curve_csv(std::ostream& out, std::span<const LagPoint> curve) {
  out << "lag,count,mae_median,mean_pi_length\n";
  for (const auto& p : curve)
    out << p.lag << ',' << p.count << ',' << format_double(p.mae_median) << ',' << format_double(p.mean_pi_length)
        << '\n';
}

}  // namespace phenocast
