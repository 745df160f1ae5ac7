#include "phenocast/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "phenocast/climate.hpp"
#include "phenocast/error.hpp"
#include "phenocast/estimate.hpp"
#include "phenocast/evaluate.hpp"
#include "phenocast/predict.hpp"
#include "phenocast/random.hpp"
#include "phenocast/serialize.hpp"

namespace phenocast::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

// Options that are not part of the reproducible configuration.
const std::set<std::string> kVolatile{"--out", "--threads", "--help"};
// Options holding input file paths; stored absolute in the manifest.
const std::set<std::string> kPathOptions{"--bloom", "--temp", "--fitted", "--arma", "--oracle-temp", "--bootstrap"};

struct Common {
  std::uint64_t seed = 0;
  std::string out = ".";
  unsigned threads = 0;
};

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  // Writes via a temporary file and rename so readers never see partial files.
  void write(const std::string& name, const std::string& content) {
    const fs::path target = dir_ / name;
    const fs::path tmp = dir_ / ("." + name + ".tmp");
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw Error("cannot write " + tmp.string());
      f << content;
      if (content.empty() || content.back() != '\n') f << '\n';
      if (!f) throw Error("cannot write " + tmp.string());
    }
    fs::rename(tmp, target);
    files_.push_back(name);
  }

  template <typename F>
  void write_with(const std::string& name, F&& fill) {
    std::ostringstream ss;
    fill(ss);
    write(name, ss.str());
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

struct ClimateOptions {
  std::string preset;
  std::string arma_file;
  std::string order;  // "p,d,q" or "select"
  std::string profile = "data";
  double variance_scale = 1.0;
};

struct Climate {
  ArmaModel arma;
  SeasonalProfile profile;
  std::string source;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Master seed; every random stream derives from it");
  sub->add_option("--out", c.out, "Output directory");
  sub->add_option("--threads", c.threads, "Worker threads (0 = available cores); results do not depend on it");
}

void add_search(CLI::App* sub, std::string& tbase, std::string& gamma, std::string& mode) {
  sub->add_option("--tbase-grid", tbase, "T_base grid lo:hi:step in degC");
  sub->add_option("--gamma-grid", gamma, "ExpSmooth gamma grid lo:hi:step");
  sub->add_option("--search", mode, "Grid search: full (every grid point) or fast (coarse-to-fine)")
      ->check(CLI::IsMember({"full", "fast"}));
}

SearchConfig resolve_search(const std::string& tbase, const std::string& gamma, const std::string& mode) {
  SearchConfig s = mode == "fast" ? SearchConfig::fast() : SearchConfig{};
  if (!tbase.empty()) s.t_base = GridRange::parse(tbase);
  if (!gamma.empty()) s.gamma = GridRange::parse(gamma);
  return s;
}

void add_climate(CLI::App* sub, ClimateOptions& c) {
  sub->add_option("--preset", c.preset, "Built-in ARMA model for the temperature remainder")
      ->check(CLI::IsMember({"okanagan-arma31"}));
  sub->add_option("--arma", c.arma_file, "ARMA model JSON (as written by simulate-temp)");
  sub->add_option("--order", c.order, "Fit the ARMA model to --temp: p,d,q or select");
  sub->add_option("--profile", c.profile, "Seasonal profile: data (day-of-year means of --temp) or okanagan-like")
      ->check(CLI::IsMember({"data", "okanagan-like"}));
  sub->add_option("--variance-scale", c.variance_scale, "Factor applied to the innovation variance");
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ArmaOrder parse_order(const std::string& text) {
  ArmaOrder o;
  char c1 = 0, c2 = 0;
  std::istringstream ss(text);
  if (!(ss >> o.p >> c1 >> o.d >> c2 >> o.q) || c1 != ',' || c2 != ',' || !ss.eof())
    throw ValidationError("--order must be p,d,q or select, got '" + text + "'");
  return o;
}

Climate resolve_climate(const ClimateOptions& opt, const std::optional<TemperatureSeries>& temp,
                        std::optional<ArmaFit>* fitted = nullptr) {
  Climate c;
  std::optional<Deseasonalized> parts;
  auto need_parts = [&]() -> const Deseasonalized& {
    if (!parts) {
      if (!temp) throw ValidationError("--temp is required for --profile data and --order");
      parts = deseasonalize(*temp);
    }
    return *parts;
  };
  if (opt.profile == "okanagan-like")
    c.profile = SeasonalProfile::okanagan_like();
  else
    c.profile = need_parts().profile;

  const int sources = (!opt.preset.empty()) + (!opt.arma_file.empty()) + (!opt.order.empty());
  if (sources > 1) throw ValidationError("give at most one of --preset, --arma, --order");
  if (!opt.arma_file.empty()) {
    c.arma = arma_model_from_json(read_file(opt.arma_file));
    c.source = "file";
  } else if (!opt.order.empty()) {
    const auto& rem = need_parts().remainder;
    ArmaFit f = opt.order == "select" ? select_arma(rem) : fit_arma(rem, parse_order(opt.order));
    c.arma = f.model;
    c.source = opt.order == "select" ? "selected" : "fitted";
    if (fitted) *fitted = std::move(f);
  } else {
    c.arma = ArmaModel::okanagan_arma31();
    c.source = "okanagan-arma31";
  }
  return c;
}

std::vector<YearPanel> load_panels(const std::string& bloom, const TemperatureSeries& temp) {
  const auto records = load_bloom(bloom);
  return build_panels(temp, records);
}

TemperatureSeries load_temp(const std::string& path, bool fill_gaps) {
  auto series = load_temperature(path);
  if (fill_gaps) series = fill_single_day_gaps(series);
  return series;
}

std::vector<double> remainder_before(const TemperatureSeries& series, const SeasonalProfile& profile, int year,
                                     std::size_t days) {
  const Date jan1 = make_date(year, 1, 1);
  auto h = series.tavg_before(jan1, days);
  for (std::size_t k = 0; k < h.size(); ++k)
    h[k] -= profile.at(add_days(jan1, -static_cast<long long>(h.size() - k)));
  return h;
}

// Records the reproducible part of a parsed subcommand.
json describe(const CLI::App* sub, std::vector<std::string>& args) {
  json config;
  for (const CLI::Option* opt : sub->get_options()) {
    std::string flag;
    for (const auto& l : opt->get_lnames()) flag = "--" + l;
    if (flag.empty() || kVolatile.count(flag)) continue;
    if (opt->count() > 0) {
      if (opt->get_items_expected_max() == 0) {
        args.push_back(flag);
        config[flag.substr(2)] = true;
        continue;
      }
      std::vector<std::string> values;
      for (std::string v : opt->results()) {
        if (kPathOptions.count(flag)) v = fs::absolute(v).lexically_normal().string();
        args.push_back(flag);
        args.push_back(v);
        values.push_back(v);
      }
      config[flag.substr(2)] = values.size() == 1 ? json(values.front()) : json(values);
    } else if (opt->get_items_expected_max() == 0) {
      config[flag.substr(2)] = false;
    } else {
      config[flag.substr(2)] = opt->get_default_str();
    }
  }
  return config;
}

void write_manifest(Outputs& outputs, const std::string& command, const json& config,
                    const std::vector<std::string>& args, const json& resolved) {
  json m;
  m["tool"] = "phenocast";
  m["version"] = kVersion;
  m["command"] = command;
  m["args"] = args;
  m["config"] = config;
  m["resolved"] = resolved;
  m["seed_derivation"] =
      "splitmix64 hash of (seed, task path); task paths: bootstrap replicate r -> (boot, r); "
      "temperature path l -> (path, l); cv prediction -> (cv, year, t_c); simulation dataset -> (sims, S, r)";
  std::vector<std::string> files = outputs.files();
  m["outputs"] = files;
  outputs.write("manifest.json", m.dump(2));
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string model = "agdd", bloom, temp, tbase, gamma, search = "full";
  bool fill_gaps = false;
};

struct BootArgs : FitArgs {
  int boot = 1000;
  double alpha = 0.05;
};

struct SelectArgs {
  std::vector<std::string> models{"agdd", "expsmooth", "gdd", "5days"};
  std::string bloom, temp, tbase, gamma, search = "full";
  bool fill_gaps = false;
};

struct SimTempArgs {
  ClimateOptions climate;
  std::string temp, start;
  int horizon = 365, paths = 10, history_days = 30;
  bool fill_gaps = false;
};

struct PredictArgs : FitArgs {
  ClimateOptions climate;
  std::string fitted, oracle_temp, bootstrap;
  int year = 0, day = 0, paths = 1000, history_days = 30;
  double alpha = 0.05;
};

struct CvArgs : FitArgs {
  ClimateOptions climate;
  int paths = 1000, history_days = 30;
  double alpha = 0.05;
  bool oracle = false;
};

struct SimStudyArgs {
  std::vector<int> sizes{30, 80, 150, 400};
  int replicates = 1000;
  bool fast = false, ci_validity = false;
  int boot = 200, day = 60, paths = 1000;
  std::string search = "";
};

struct SynthArgs {
  int first_year = 1936, years = 28;
};

void add_fit_inputs(CLI::App* sub, FitArgs& a, bool need_model = true) {
  if (need_model)
    sub->add_option("--model", a.model, "Covariate family: agdd, expsmooth, gdd or 5days")
        ->check(CLI::IsMember({"agdd", "expsmooth", "gdd", "5days"}));
  sub->add_option("--bloom", a.bloom, "Bloom CSV: year,bloom_day[,censored_at]");
  sub->add_option("--temp", a.temp, "Temperature CSV: date,tmin,tmax or date,tavg");
  sub->add_flag("--fill-gaps", a.fill_gaps, "Interpolate isolated one-day temperature gaps");
  add_search(sub, a.tbase, a.gamma, a.search);
}

FittedModel fit_from(const FitArgs& a, const TemperatureSeries& temp) {
  if (a.bloom.empty()) throw ValidationError("--bloom is required");
  const auto panels = load_panels(a.bloom, temp);
  return fit({parse_family(a.model)}, panels, resolve_search(a.tbase, a.gamma, a.search));
}

TemperatureSeries require_temp(const std::string& path, bool fill) {
  if (path.empty()) throw ValidationError("--temp is required");
  return load_temp(path, fill);
}

}  // namespace

int run(const std::vector<std::string>& input, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bloom-date prediction with discrete-time hazard models on growing degree days", "phenocast"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kVersion);
  app.option_defaults()->always_capture_default();

  Common common;
  FitArgs fa;
  SelectArgs sa;
  BootArgs ba;
  SimTempArgs ta;
  PredictArgs pa;
  CvArgs ca;
  SimStudyArgs ssa;
  SynthArgs sya;
  std::string manifest_path;

  auto* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood fit of one covariate family");
  add_fit_inputs(fit_cmd, fa);
  add_common(fit_cmd, common);

  auto* select_cmd = app.add_subcommand("select", "Fit several families and rank them by BIC");
  select_cmd->add_option("--models", sa.models, "Families to compare")->delimiter(',');
  select_cmd->add_option("--bloom", sa.bloom, "Bloom CSV");
  select_cmd->add_option("--temp", sa.temp, "Temperature CSV");
  select_cmd->add_flag("--fill-gaps", sa.fill_gaps, "Interpolate isolated one-day temperature gaps");
  add_search(select_cmd, sa.tbase, sa.gamma, sa.search);
  add_common(select_cmd, common);

  auto* boot_cmd = app.add_subcommand("bootstrap", "Year-resampling bootstrap of the MLE");
  add_fit_inputs(boot_cmd, ba);
  boot_cmd->add_option("--boot", ba.boot, "Bootstrap replicates B (>= 100)");
  boot_cmd->add_option("--alpha", ba.alpha, "Interval level is 1 - alpha");
  add_common(boot_cmd, common);

  auto* simt_cmd = app.add_subcommand("simulate-temp", "Fit or load an ARMA remainder model and simulate paths");
  add_climate(simt_cmd, ta.climate);
  simt_cmd->add_option("--temp", ta.temp, "Temperature CSV for the profile, fitting, history and diagnostics");
  simt_cmd->add_flag("--fill-gaps", ta.fill_gaps, "Interpolate isolated one-day temperature gaps");
  simt_cmd->add_option("--start", ta.start, "First simulated date (default: day after the last --temp date)");
  simt_cmd->add_option("--horizon", ta.horizon, "Days per path");
  simt_cmd->add_option("--paths", ta.paths, "Number of paths");
  simt_cmd->add_option("--history-days", ta.history_days, "Remainder values used to start the recursion");
  add_common(simt_cmd, common);

  auto* pred_cmd = app.add_subcommand("predict", "Monte Carlo predictive distribution of the bloom day");
  add_fit_inputs(pred_cmd, pa);
  add_climate(pred_cmd, pa.climate);
  pred_cmd->add_option("--fitted", pa.fitted, "Fitted model JSON from `fit` (instead of fitting --bloom)");
  pred_cmd->add_option("--year", pa.year, "Target year")->required();
  pred_cmd->add_option("--day", pa.day, "Current day t_c: temperatures of days 1..t_c are observed");
  pred_cmd->add_option("--paths", pa.paths, "Simulated temperature paths L (>= 100)");
  pred_cmd->add_option("--oracle-temp", pa.oracle_temp, "Temperature CSV with the known future of the target year");
  pred_cmd->add_option("--bootstrap", pa.bootstrap, "Bootstrap JSON; adds a per-day confidence band");
  pred_cmd->add_option("--alpha", pa.alpha, "Interval level is 1 - alpha");
  pred_cmd->add_option("--history-days", pa.history_days, "Remainder values before January 1 fed to the ARMA model");
  add_common(pred_cmd, common);

  auto* cv_cmd = app.add_subcommand("cv", "Leave-one-year-out cross-validation and naive baselines");
  add_fit_inputs(cv_cmd, ca);
  add_climate(cv_cmd, ca.climate);
  cv_cmd->add_option("--paths", ca.paths, "Simulated temperature paths L per prediction");
  cv_cmd->add_flag("--oracle", ca.oracle, "Use the held-out year's actual temperatures (known future)");
  cv_cmd->add_option("--alpha", ca.alpha, "Interval level is 1 - alpha");
  cv_cmd->add_option("--history-days", ca.history_days, "Remainder values before January 1 fed to the ARMA model");
  add_common(cv_cmd, common);

  auto* ss_cmd = app.add_subcommand("simstudy", "Estimator consistency on synthetic data");
  ss_cmd->add_option("--sizes", ssa.sizes, "Sample sizes S (years per dataset)")->delimiter(',');
  auto* rep_opt = ss_cmd->add_option("--replicates", ssa.replicates, "Datasets R per size (>= 2)");
  ss_cmd->add_flag("--fast", ssa.fast, "R = 200 unless --replicates is given, and coarse-to-fine search");
  ss_cmd->add_flag("--ci-validity", ssa.ci_validity, "Also compare bootstrap and simulation predictive CIs");
  ss_cmd->add_option("--boot", ssa.boot, "Bootstrap replicates for --ci-validity");
  ss_cmd->add_option("--day", ssa.day, "Observed days of the test year for --ci-validity");
  ss_cmd->add_option("--paths", ssa.paths, "Temperature paths for --ci-validity");
  ss_cmd->add_option("--search", ssa.search, "Grid search: full or fast (default: fast with --fast)")
      ->check(CLI::IsMember({"full", "fast"}));
  add_common(ss_cmd, common);

  auto* synth_cmd = app.add_subcommand("synth", "Write the synthetic temperature and crop-analog bloom fixture");
  synth_cmd->add_option("--first-year", sya.first_year, "Lead year (temperatures only)");
  synth_cmd->add_option("--years", sya.years, "Bloom years after the lead year");
  add_common(synth_cmd, common);

  auto* rerun_cmd = app.add_subcommand("rerun", "Repeat a run from its manifest.json");
  rerun_cmd->add_option("manifest", manifest_path, "Manifest file")->required();
  rerun_cmd->add_option("--out", common.out, "Output directory");
  rerun_cmd->add_option("--threads", common.threads, "Worker threads");

  try {
    std::vector<std::string> reversed(input.rbegin(), input.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();

  if (command == "rerun") {
    try {
      const json m = json::parse(read_file(manifest_path));
      std::vector<std::string> args{m.at("command").get<std::string>()};
      for (const auto& a : m.at("args")) args.push_back(a.get<std::string>());
      args.insert(args.end(), {"--out", common.out, "--threads", std::to_string(common.threads)});
      return run(args, out, err);
    } catch (const json::exception& e) {
      err << "error: invalid manifest: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }

  std::vector<std::string> args;
  const json config = describe(sub, args);
  json resolved;
  resolved["seed"] = common.seed;

  try {
    Outputs outputs(common.out);
    if (command == "fit") {
      const auto temp = require_temp(fa.temp, fa.fill_gaps);
      const auto fitted = fit_from(fa, temp);
      resolved["search"] = json::parse(to_json(resolve_search(fa.tbase, fa.gamma, fa.search)));
      outputs.write("model.json", to_json(fitted));
      out << "fit " << fa.model << ": loglik " << format_double(fitted.loglik) << ", bic " << format_double(fitted.bic)
          << (fitted.weakly_identified ? " (weakly identified)" : "") << '\n';
    } else if (command == "select") {
      const auto temp = require_temp(sa.temp, sa.fill_gaps);
      if (sa.bloom.empty()) throw ValidationError("--bloom is required");
      const auto panels = load_panels(sa.bloom, temp);
      std::vector<HazardModelSpec> specs;
      for (const auto& m : sa.models) specs.push_back({parse_family(m)});
      const auto search = resolve_search(sa.tbase, sa.gamma, sa.search);
      resolved["search"] = json::parse(to_json(search));
      const auto ranking = bic_compare(specs, panels, search, common.threads);
      outputs.write("ranking.json", to_json(std::span<const RankedModel>(ranking)));
      for (const auto& r : ranking)
        out << to_string(r.spec.family) << ": "
            << (r.fitted ? "bic " + format_double(r.fitted->bic) : "failed: " + r.error) << '\n';
    } else if (command == "bootstrap") {
      const auto temp = require_temp(ba.temp, ba.fill_gaps);
      if (ba.bloom.empty()) throw ValidationError("--bloom is required");
      const auto panels = load_panels(ba.bloom, temp);
      BootstrapOptions bo;
      bo.replicates = ba.boot;
      bo.seed = common.seed;
      bo.alpha = ba.alpha;
      bo.threads = common.threads;
      bo.search = resolve_search(ba.tbase, ba.gamma, ba.search);
      resolved["search"] = json::parse(to_json(bo.search));
      const auto fitted = fit({parse_family(ba.model)}, panels, bo.search);
      const auto summary = bootstrap({parse_family(ba.model)}, panels, bo);
      outputs.write("model.json", to_json(fitted));
      outputs.write("bootstrap.json", to_json(summary));
      for (const auto& p : summary.parameters)
        out << p.name << ": se " << format_double(p.standard_error) << ", ci [" << format_double(p.ci_lower) << ", "
            << format_double(p.ci_upper) << "]\n";
      if (summary.failed > 0) out << summary.failed << " replicate fits failed and were dropped\n";
    } else if (command == "simulate-temp") {
      std::optional<TemperatureSeries> temp;
      if (!ta.temp.empty()) temp = load_temp(ta.temp, ta.fill_gaps);
      std::optional<ArmaFit> arma_fit;
      const Climate climate = resolve_climate(ta.climate, temp, &arma_fit);
      Date start = make_date(2001, 1, 1);
      if (!ta.start.empty())
        start = parse_iso_date(ta.start);
      else if (temp)
        start = add_days(temp->last_date(), 1);
      std::vector<double> history;
      if (temp) {
        // Remainders of the days just before the start date.
        const auto before = temp->tavg_before(start, static_cast<std::size_t>(ta.history_days));
        for (std::size_t k = 0; k < before.size(); ++k)
          history.push_back(before[k] - climate.profile.at(add_days(start, -static_cast<long long>(before.size() - k))));
      }
      const auto o = climate.arma.order();
      const auto need = static_cast<std::size_t>(std::max(o.p + o.d, o.q));
      const bool padded = history.size() < need;
      if (padded) history.insert(history.begin(), need - history.size(), 0.0);
      PathRequest req;
      req.start = start;
      req.horizon = ta.horizon;
      req.n_paths = ta.paths;
      req.seed = common.seed;
      req.variance_scale = ta.climate.variance_scale;
      const auto paths = simulate_paths(climate.arma, climate.profile, history, req);
      resolved["arma"] = json::parse(to_json(climate.arma));
      resolved["arma_source"] = climate.source;
      resolved["start"] = format_iso_date(start);
      resolved["history_padded"] = padded;
      outputs.write("arma.json", arma_fit ? to_json(*arma_fit) : to_json(climate.arma));
      outputs.write_with("paths.csv", [&](std::ostream& s) { write_paths_csv(s, paths, 1); });
      if (temp) {
        const auto parts = deseasonalize(*temp);
        std::vector<double> observed = parts.remainder;
        for (std::size_t i = 0; i < observed.size(); ++i)
          observed[i] = temp->records()[i].tavg() - climate.profile.at(temp->records()[i].date);
        std::vector<double> simulated;
        const std::uint64_t diag_seed = derive_seed(common.seed, {stream::paths, 0xd1a6});
        if (climate.arma.d == 0) {
          simulated = simulate_stationary(climate.arma, observed.size(), diag_seed);
        } else {
          PathRequest dr;
          dr.horizon = static_cast<int>(observed.size());
          dr.seed = diag_seed;
          simulated = simulate_remainder_paths(climate.arma, std::vector<double>(need, 0.0), dr).front();
        }
        const auto diag = diagnostics(observed, simulated);
        outputs.write("diagnostics.json", to_json(diag));
        outputs.write_with("acf.csv", [&](std::ostream& s) { write_acf_csv(s, diag); });
      }
      out << "simulated " << ta.paths << " paths of " << ta.horizon << " days from " << format_iso_date(start) << '\n';
    } else if (command == "predict") {
      std::optional<TemperatureSeries> temp;
      if (!pa.temp.empty()) temp = load_temp(pa.temp, pa.fill_gaps);
      FittedModel fitted;
      if (!pa.fitted.empty()) {
        fitted = fitted_model_from_json(read_file(pa.fitted));
      } else {
        if (!temp) throw ValidationError("--temp is required when fitting (or pass --fitted)");
        fitted = fit_from(pa, *temp);
      }
      std::optional<TemperatureSeries> oracle;
      if (!pa.oracle_temp.empty()) oracle = load_temperature(pa.oracle_temp);
      const TemperatureSeries* observed_source = temp ? &*temp : (oracle ? &*oracle : nullptr);
      if (pa.day > 0 && !observed_source) throw ValidationError("--temp is required to observe days 1..t_c");
      std::vector<double> observed;
      if (pa.day > 0) observed = observed_source->year_tavg(pa.year, pa.day);

      PredictionContext ctx;
      ctx.spec = fitted.spec;
      ctx.params = fitted.params;
      ctx.year = pa.year;
      ctx.observed = observed;
      ctx.n_paths = pa.paths;
      ctx.seed = common.seed;
      ctx.threads = common.threads;
      if (oracle) {
        const int D = days_in_year(pa.year);
        const auto full = oracle->year_tavg(pa.year, D);
        ctx.climate = KnownFuture{{std::vector<double>(full.begin() + pa.day, full.end())}};
        ctx.n_paths = 1;
        resolved["climate"] = "oracle";
      } else {
        const Climate climate = resolve_climate(pa.climate, temp);
        std::vector<double> history;
        if (temp)
          history = remainder_before(*temp, climate.profile, pa.year, static_cast<std::size_t>(pa.history_days));
        ctx.climate = ClimateDriver{climate.arma, climate.profile, history, pa.climate.variance_scale};
        resolved["climate"] = climate.source;
        resolved["arma"] = json::parse(to_json(climate.arma));
      }
      const auto dist = predictive_distribution(ctx);
      std::optional<PointSummary> summary;
      try {
        summary = point_and_interval(dist, pa.alpha);
      } catch (const ComputationError& e) {
        err << "warning: " << e.what() << '\n';
      }
      if (dist.tail_warning) err << "warning: every path leaves more than half its mass beyond the year\n";
      outputs.write("prediction.json", to_json(dist, summary ? &*summary : nullptr));
      outputs.write_with("distribution.csv", [&](std::ostream& s) { write_distribution_csv(s, dist); });
      if (!pa.bootstrap.empty()) {
        const auto boot = bootstrap_from_json(read_file(pa.bootstrap));
        const auto band = bootstrap_band(ctx, boot, pa.alpha);
        outputs.write_with("band.csv", [&](std::ostream& s) { write_band_csv(s, band); });
      }
      if (summary)
        out << "median " << summary->median << ", mode " << summary->mode << ", mean " << format_double(summary->mean)
            << ", PI [" << summary->lower << ", " << summary->upper << "]\n";
    } else if (command == "cv") {
      const auto temp = require_temp(ca.temp, ca.fill_gaps);
      if (ca.bloom.empty()) throw ValidationError("--bloom is required");
      const auto records = load_bloom(ca.bloom);
      const auto panels = build_panels(temp, records);
      CvConfig cfg;
      cfg.spec = {parse_family(ca.model)};
      cfg.search = resolve_search(ca.tbase, ca.gamma, ca.search);
      cfg.oracle = ca.oracle;
      cfg.n_paths = ca.paths;
      cfg.alpha = ca.alpha;
      cfg.history_days = ca.history_days;
      cfg.seed = common.seed;
      cfg.threads = common.threads;
      cfg.variance_scale = ca.climate.variance_scale;
      if (!ca.oracle) {
        const Climate climate = resolve_climate(ca.climate, temp);
        cfg.arma = climate.arma;
        cfg.profile = climate.profile;
        resolved["climate"] = climate.source;
        resolved["arma"] = json::parse(to_json(climate.arma));
      } else {
        resolved["climate"] = "oracle";
      }
      resolved["search"] = json::parse(to_json(cfg.search));
      std::ostringstream log;
      write_predictions_csv(log, {}, true);
      const auto report = loo_cv(panels, temp, cfg,
                                 [&](std::span<const CvPrediction> year) { write_predictions_csv(log, year, false); });
      outputs.write("predictions.csv", log.str());
      outputs.write("cv.json", to_json(report));
      outputs.write_with("lag_curve.csv", [&](std::ostream& s) { write_lag_curve_csv(s, report.lag_curve); });
      std::vector<BloomRecord> observed;
      for (const auto& r : records)
        if (!r.censored) observed.push_back(r);
      if (observed.size() >= 5) outputs.write("baselines.json", to_json(naive_baselines(observed)));
      for (const auto& w : report.warnings) err << "warning: " << w << '\n';
      out << "cv: " << report.n_predictions << " predictions over " << report.n_years << " years, RMSE(median) "
          << format_double(report.rmse.median) << ", coverage " << format_double(report.coverage) << ", PI length "
          << format_double(report.mean_pi_length) << '\n';
    } else if (command == "simstudy") {
      SimStudyConfig sc;
      sc.sizes = ssa.sizes;
      sc.replicates = ssa.fast && rep_opt->count() == 0 ? 200 : ssa.replicates;
      sc.seed = common.seed;
      sc.threads = common.threads;
      const std::string mode = ssa.search.empty() ? (ssa.fast ? "fast" : "full") : ssa.search;
      sc.search = mode == "fast" ? SearchConfig::fast() : SearchConfig{};
      resolved["replicates"] = sc.replicates;
      resolved["search"] = json::parse(to_json(sc.search));
      const auto report = consistency_study(sc);
      outputs.write("simstudy.json", to_json(report));
      if (ssa.ci_validity) {
        CiValidityConfig cc;
        cc.study = sc;
        cc.bootstrap_replicates = ssa.boot;
        cc.current_day = ssa.day;
        cc.n_paths = ssa.paths;
        const auto ci = prediction_ci_validity(cc, &report);
        outputs.write("ci_validity.json", to_json(ci));
      }
      for (const auto& s : report.sizes) {
        out << "S=" << s.size << " (" << s.replicates << " fits):";
        for (std::size_t j = 0; j < s.names.size(); ++j)
          out << ' ' << s.names[j] << " mean " << format_double(s.mean[j]) << " var " << format_double(s.variance[j]);
        out << '\n';
      }
    } else if (command == "synth") {
      const auto fx = generate_fixture(sya.first_year, sya.years, common.seed);
      outputs.write_with("temperature.csv", [&](std::ostream& s) { write_temperature_csv(s, fx.temperature); });
      json truth = json::object();
      for (std::size_t c = 0; c < fx.crops.size(); ++c) {
        outputs.write_with("bloom_" + fx.crops[c] + ".csv",
                           [&](std::ostream& s) { write_bloom_csv(s, fx.blooms[c]); });
        truth[fx.crops[c]] = json::parse(to_json(crop_analogs()[c].params, Family::agdd));
      }
      outputs.write("truth.json", truth.dump(2));
      out << "wrote " << fx.temperature.size() << " temperature days and " << fx.crops.size() << " bloom files\n";
    }
    write_manifest(outputs, command, config, args, resolved);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace phenocast::cli
