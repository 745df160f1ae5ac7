#include "phenocast/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

#include "phenocast/error.hpp"
#include "phenocast/parallel.hpp"
#include "phenocast/random.hpp"
#include "phenocast/stats.hpp"

namespace phenocast {

ParamVector simulation_truth() { return ParamVector{-13.0, {0.04}, std::nullopt, 3.5}; }

const std::vector<CropAnalog>& crop_analogs() {
  static const std::vector<CropAnalog> table{
      {"apricot", {-13.49, {0.061}, std::nullopt, 2.65}}, {"cherry", {-11.72, {0.043}, std::nullopt, 3.35}},
      {"peach", {-19.67, {0.043}, std::nullopt, 0.38}},   {"prune", {-18.23, {0.057}, std::nullopt, 2.80}},
      {"pear", {-22.27, {0.07}, std::nullopt, 2.97}},     {"apple", {-26.77, {0.07}, std::nullopt, 2.82}},
  };
  return table;
}

BloomRecord draw_event(const HazardModelSpec& spec, const ParamVector& truth, int year, std::span<const double> tavg,
                       Rng& rng) {
  if (tavg.empty()) throw ValidationError("draw_event: empty temperature path");
  const auto path = hazard_path(spec, tavg, truth);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t t = 0; t < path.probability.size(); ++t)
    if (unif(rng) < path.probability[t]) return BloomRecord::observed(year, static_cast<int>(t) + 1);
  return BloomRecord::censored_at(year, static_cast<int>(tavg.size()));
}

YearPanel generate_synthetic_year(const SeasonalProfile& profile, const ArmaModel& arma, const ParamVector& truth,
                                  int year, std::uint64_t seed, const HazardModelSpec& spec) {
  const int D = days_in_year(year);
  const auto remainder = simulate_stationary(arma, static_cast<std::size_t>(D), derive_seed(seed, {1}));
  std::vector<double> tavg(remainder.size());
  for (int t = 0; t < D; ++t)
    tavg[static_cast<std::size_t>(t)] = profile.at(date_from_day_of_year(year, t + 1)) + remainder[static_cast<std::size_t>(t)];
  Rng rng = make_rng(seed, {2});
  const auto outcome = draw_event(spec, truth, year, tavg, rng);
  return YearPanel(year, std::move(tavg), outcome);
}

std::vector<YearPanel> generate_synthetic_dataset(const SeasonalProfile& profile, const ArmaModel& arma,
                                                  const ParamVector& truth, int n_years, std::uint64_t seed,
                                                  int first_year, const HazardModelSpec& spec) {
  if (n_years < 1) throw ValidationError("need at least one synthetic year");
  std::vector<YearPanel> out;
  out.reserve(static_cast<std::size_t>(n_years));
  for (int i = 0; i < n_years; ++i)
    out.push_back(generate_synthetic_year(profile, arma, truth, first_year + i,
                                          derive_seed(seed, {stream::synthetic, static_cast<std::uint64_t>(i)}),
                                          spec));
  return out;
}

SyntheticFixture generate_fixture(int first_year, int n_years, std::uint64_t seed, const SeasonalProfile& profile,
                                  const ArmaModel& arma) {
  if (n_years < 1) throw ValidationError("need at least one fixture year");
  const Date first = make_date(first_year, 1, 1);
  const Date last = make_date(first_year + n_years, 12, 31);
  const auto n = static_cast<std::size_t>(days_between(first, last) + 1);
  const auto remainder = simulate_stationary(arma, n, derive_seed(seed, {stream::synthetic, 0}));
  std::vector<double> tavg(n);
  for (std::size_t i = 0; i < n; ++i)
    tavg[i] = std::round((profile.at(add_days(first, static_cast<long long>(i))) + remainder[i]) * 100.0) / 100.0;
  SyntheticFixture fx{TemperatureSeries::from_tavg(first, tavg), {}, {}};
  const auto& crops = crop_analogs();
  for (std::size_t c = 0; c < crops.size(); ++c) {
    fx.crops.push_back(crops[c].name);
    std::vector<BloomRecord> records;
    for (int y = first_year + 1; y <= first_year + n_years; ++y) {
      const auto year_tavg = fx.temperature.year_tavg(y, days_in_year(y));
      Rng rng = make_rng(seed, {stream::synthetic, 1, c, static_cast<std::uint64_t>(y)});
      records.push_back(draw_event({Family::agdd}, crops[c].params, y, year_tavg, rng));
    }
    fx.blooms.push_back(std::move(records));
  }
  return fx;
}

// ---------------------------------------------------------------------------

std::vector<YearPanel> simstudy_dataset(const SimStudyConfig& config, int size, int replicate) {
  return generate_synthetic_dataset(
      config.profile, config.arma, config.truth, size,
      derive_seed(config.seed, {stream::simstudy, static_cast<std::uint64_t>(size), static_cast<std::uint64_t>(replicate)}));
}

namespace {

SizeEstimates summarize_size(int size, const std::vector<std::optional<ParamVector>>& fits) {
  SizeEstimates s;
  s.size = size;
  s.names = ParamVector::names(Family::agdd);
  for (std::size_t r = 0; r < fits.size(); ++r) {
    if (fits[r]) {
      s.estimates.push_back(*fits[r]);
      s.replicate_index.push_back(static_cast<int>(r));
    } else {
      ++s.failed;
    }
  }
  s.replicates = static_cast<int>(s.estimates.size());
  if (s.replicates < 2)
    throw ComputationError("S = " + std::to_string(size) + ": fewer than 2 successful replicate fits");
  const std::size_t k = s.names.size();
  std::vector<double> column(s.estimates.size());
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t r = 0; r < s.estimates.size(); ++r) column[r] = s.estimates[r].flatten()[j];
    const double var = stats::sample_variance(column);
    s.mean.push_back(stats::mean(column));
    s.variance.push_back(var);
    s.standard_error.push_back(std::sqrt(var / static_cast<double>(s.replicates)));
  }
  return s;
}

}  // namespace

SimStudyReport consistency_study(const SimStudyConfig& config) {
  if (config.replicates < 2) throw ValidationError("consistency study needs R >= 2 replicates");
  if (config.sizes.empty()) throw ValidationError("consistency study needs at least one sample size");
  config.truth.validate(Family::agdd);
  SimStudyReport report;
  report.truth = config.truth;
  report.requested = config.replicates;
  report.seed = config.seed;
  for (int size : config.sizes) {
    if (size < 2) throw ValidationError("sample sizes must be at least 2 years");
    std::vector<std::optional<ParamVector>> fits(static_cast<std::size_t>(config.replicates));
    parallel_for(fits.size(), config.threads, [&](std::size_t r) {
      const auto panels = simstudy_dataset(config, size, static_cast<int>(r));
      try {
        fits[r] = fit({Family::agdd}, panels, config.search).params;
      } catch (const ComputationError&) {
      }
    });
    report.sizes.push_back(summarize_size(size, fits));
  }
  return report;
}

// ---------------------------------------------------------------------------

CvReport summarize_predictions(std::span<const CvPrediction> predictions) {
  CvReport rep;
  rep.n_predictions = static_cast<int>(predictions.size());
  std::set<int> years;
  const std::size_t n = predictions.size();
  std::vector<double> sq_mode(n), sq_median(n), sq_mean(n), ab_mode(n), ab_median(n), ab_mean(n), len(n);
  std::size_t covered = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = predictions[i];
    years.insert(p.year);
    const double e_mode = p.mode - p.true_day, e_median = p.median - p.true_day, e_mean = p.mean - p.true_day;
    sq_mode[i] = e_mode * e_mode;
    sq_median[i] = e_median * e_median;
    sq_mean[i] = e_mean * e_mean;
    ab_mode[i] = std::abs(e_mode);
    ab_median[i] = std::abs(e_median);
    ab_mean[i] = std::abs(e_mean);
    len[i] = p.upper - p.lower;
    if (p.covered) ++covered;
  }
  rep.n_years = static_cast<int>(years.size());
  if (n > 0) {
    rep.rmse = {std::sqrt(stats::mean(sq_mode)), std::sqrt(stats::mean(sq_median)), std::sqrt(stats::mean(sq_mean))};
    rep.mae = {stats::mean(ab_mode), stats::mean(ab_median), stats::mean(ab_mean)};
    rep.coverage = static_cast<double>(covered) / static_cast<double>(n);
    rep.mean_pi_length = stats::mean(len);
  }
  for (int lag = -90; lag <= -1; ++lag) {
    LagPoint lp{lag};
    std::vector<double> err, width;
    for (const auto& p : predictions)
      if (p.lag == lag) {
        err.push_back(std::abs(p.median - p.true_day));
        width.push_back(p.upper - p.lower);
      }
    lp.count = static_cast<int>(err.size());
    if (!err.empty()) {
      lp.mae_median = stats::mean(err);
      lp.mean_pi_length = stats::mean(width);
    }
    rep.lag_curve.push_back(lp);
  }
  rep.predictions.assign(predictions.begin(), predictions.end());
  return rep;
}

CvReport loo_cv(std::span<const YearPanel> panels, const TemperatureSeries& series, const CvConfig& config,
                const std::function<void(std::span<const CvPrediction>)>& on_year) {
  if (panels.size() < 3) throw ValidationError("cross-validation needs at least 3 years");
  const std::size_t n = panels.size();
  std::vector<std::vector<CvPrediction>> per_year(n);
  std::vector<std::string> warnings(n);

  parallel_for(n, config.threads, [&](std::size_t i) {
    const YearPanel& held = panels[i];
    const int year = held.year();
    const int D = held.days_in_year();
    if (held.censored()) {
      warnings[i] = "year " + std::to_string(year) + " skipped: bloom not observed";
      return;
    }
    if (held.length() < D) {
      warnings[i] = "year " + std::to_string(year) + " skipped: temperatures missing after day " +
                    std::to_string(held.length());
      return;
    }
    std::vector<YearPanel> training;
    training.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) training.push_back(panels[j]);
    const FittedModel fitted = fit(config.spec, training, config.search);

    const Date jan1 = make_date(year, 1, 1);
    std::vector<double> history = series.tavg_before(jan1, static_cast<std::size_t>(config.history_days));
    for (std::size_t k = 0; k < history.size(); ++k)
      history[k] -= config.profile.at(add_days(jan1, -static_cast<long long>(history.size() - k)));

    const int T = held.outcome().day;
    const auto tavg = held.tavg();
    for (int t_c = 0; t_c < T; ++t_c) {
      PredictionContext ctx;
      ctx.spec = fitted.spec;
      ctx.params = fitted.params;
      ctx.year = year;
      ctx.observed.assign(tavg.begin(), tavg.begin() + t_c);
      ctx.seed = derive_seed(config.seed, {stream::cv, static_cast<std::uint64_t>(year), static_cast<std::uint64_t>(t_c)});
      ctx.threads = 1;
      if (config.oracle) {
        ctx.climate = KnownFuture{{std::vector<double>(tavg.begin() + t_c, tavg.begin() + D)}};
        ctx.n_paths = 1;
      } else {
        ctx.climate = ClimateDriver{config.arma, config.profile, history, config.variance_scale};
        ctx.n_paths = config.n_paths;
      }
      const auto dist = predictive_distribution(ctx);
      CvPrediction p;
      p.year = year;
      p.current_day = t_c;
      p.lag = t_c - T;
      p.true_day = T;
      p.tail = dist.tail;
      const auto s = point_and_interval(dist, config.alpha);
      p.mean = s.mean;
      p.median = s.median;
      p.mode = s.mode;
      p.lower = s.lower;
      p.upper = s.upper;
      p.covered = s.covers(T);
      per_year[i].push_back(p);
    }
  });

  std::vector<CvPrediction> all;
  std::vector<int> skipped;
  std::vector<std::string> notes;
  for (std::size_t i = 0; i < n; ++i) {
    if (!warnings[i].empty()) {
      skipped.push_back(panels[i].year());
      notes.push_back(warnings[i]);
      continue;
    }
    if (on_year) on_year(per_year[i]);
    all.insert(all.end(), per_year[i].begin(), per_year[i].end());
  }
  CvReport rep = summarize_predictions(all);
  rep.skipped_years = std::move(skipped);
  rep.warnings = std::move(notes);
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

struct Interval {
  double lower, upper;
};

Interval normal_interval(std::span<const double> days) {
  const double m = stats::mean(days);
  const double sd = days.size() > 1 ? std::sqrt(stats::sample_variance(days)) : 0.0;
  return {m - 1.96 * sd, m + 1.96 * sd};
}

Interval quantile_interval(std::span<const double> days) {
  const auto sorted = stats::sorted_copy(days);
  return {stats::quantile_sorted(sorted, 0.025), stats::quantile_sorted(sorted, 0.975)};
}

template <typename Build>
IntervalBaseline evaluate_interval(std::span<const double> days, Build&& build) {
  IntervalBaseline b;
  const Interval full = build(days);
  b.lower = full.lower;
  b.upper = full.upper;
  b.length = full.upper - full.lower;
  std::size_t in = 0, loo = 0;
  std::vector<double> rest;
  for (std::size_t i = 0; i < days.size(); ++i) {
    if (days[i] >= full.lower && days[i] <= full.upper) ++in;
    rest.clear();
    for (std::size_t j = 0; j < days.size(); ++j)
      if (j != i) rest.push_back(days[j]);
    const Interval part = build(rest);
    if (days[i] >= part.lower && days[i] <= part.upper) ++loo;
  }
  b.coverage_in_sample = static_cast<double>(in) / static_cast<double>(days.size());
  b.coverage_loo = static_cast<double>(loo) / static_cast<double>(days.size());
  return b;
}

}  // namespace

NaiveBaselines naive_baselines(std::span<const BloomRecord> records) {
  std::vector<double> days;
  for (const auto& r : records) {
    if (r.censored) throw ValidationError("naive baselines need uncensored bloom records");
    days.push_back(r.day);
  }
  if (days.size() < 5) throw ValidationError("naive baselines need at least 5 years");
  NaiveBaselines out;
  out.n_years = static_cast<int>(days.size());
  out.mean = stats::mean(days);
  out.sd = std::sqrt(stats::sample_variance(days));
  out.normal = evaluate_interval(days, normal_interval);
  out.quantile = evaluate_interval(days, quantile_interval);
  const auto [lo, hi] = std::minmax_element(days.begin(), days.end());
  out.min = static_cast<int>(*lo);
  out.max = static_cast<int>(*hi);
  out.range = out.max - out.min;
  return out;
}

// ---------------------------------------------------------------------------

CiValidityReport prediction_ci_validity(const CiValidityConfig& config, const SimStudyReport* study) {
  const SimStudyConfig& sc = config.study;
  if (config.bootstrap_replicates < 100) throw ValidationError("bootstrap needs B >= 100");
  const HazardModelSpec spec{Family::agdd};
  SimStudyReport own;
  if (!study) {
    own = consistency_study(sc);
    study = &own;
  }
  CiValidityReport report;
  for (int size : sc.sizes) {
    const auto it = std::find_if(study->sizes.begin(), study->sizes.end(),
                                 [&](const SizeEstimates& s) { return s.size == size; });
    if (it == study->sizes.end()) throw ValidationError("study has no fits for S = " + std::to_string(size));

    const int test_year = 2000;
    const YearPanel test = generate_synthetic_year(sc.profile, sc.arma, sc.truth, test_year,
                                                   derive_seed(sc.seed, {stream::test_year, static_cast<std::uint64_t>(size)}));
    PredictionContext ctx;
    ctx.spec = spec;
    ctx.params = sc.truth;
    ctx.year = test_year;
    ctx.observed.assign(test.tavg().begin(), test.tavg().begin() + config.current_day);
    ctx.climate = ClimateDriver{sc.arma, sc.profile, {}, 1.0};
    ctx.n_paths = config.n_paths;
    ctx.seed = derive_seed(sc.seed, {stream::test_year, static_cast<std::uint64_t>(size), 1});
    ctx.threads = sc.threads;
    const auto paths = draw_paths(ctx);
    const auto truth_dist = distribution_from_paths(spec, sc.truth, test_year, ctx.observed, paths.paths, sc.threads);
    const auto truth_summary = point_and_interval(truth_dist, config.alpha);

    CiValidityRow row;
    row.size = size;
    row.day = truth_summary.mode;
    row.true_probability = truth_dist.mass_at(row.day);

    auto probabilities = [&](std::span<const ParamVector> params) {
      std::vector<double> out(params.size());
      for (std::size_t r = 0; r < params.size(); ++r)
        out[r] = distribution_from_paths(spec, params[r], test_year, ctx.observed, paths.paths, sc.threads)
                     .mass_at(row.day);
      std::sort(out.begin(), out.end());
      return out;
    };
    const auto sim = probabilities(it->estimates);
    row.sim_lower = stats::quantile_sorted(sim, config.alpha / 2.0);
    row.sim_upper = stats::quantile_sorted(sim, 1.0 - config.alpha / 2.0);
    row.sim_replicates = static_cast<int>(sim.size());

    BootstrapOptions bo;
    bo.replicates = config.bootstrap_replicates;
    bo.seed = derive_seed(sc.seed, {stream::bootstrap, static_cast<std::uint64_t>(size)});
    bo.alpha = config.alpha;
    bo.threads = sc.threads;
    bo.search = sc.search;
    row.bootstrap = bootstrap(spec, simstudy_dataset(sc, size, 0), bo);
    const auto boot = probabilities(row.bootstrap.replicates);
    row.boot_lower = stats::quantile_sorted(boot, config.alpha / 2.0);
    row.boot_upper = stats::quantile_sorted(boot, 1.0 - config.alpha / 2.0);
    row.boot_replicates = static_cast<int>(boot.size());
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace phenocast
