#pragma once

// Synthetic data generation and the evaluation protocols: estimator
// consistency, leave-one-out cross-validation, naive baselines and the
// validity of bootstrap intervals for predictive probabilities.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "phenocast/climate.hpp"
#include "phenocast/estimate.hpp"
#include "phenocast/predict.hpp"

namespace phenocast {

/// (a, b, t_base) = (-13, 0.04, 3.5) for the AGDD family.
ParamVector simulation_truth();

struct CropAnalog {
  std::string name;
  ParamVector params;  // AGDD family
};
/// Six AGDD parameter sets with realistic bloom windows (apricot through
/// apple, earliest to latest).
const std::vector<CropAnalog>& crop_analogs();

/// Draws the first event day by sequential Bernoulli trials along the
/// hazard path; censored at the end of the temperatures if none succeeds.
BloomRecord draw_event(const HazardModelSpec& spec, const ParamVector& truth, int year,
                       std::span<const double> tavg, Rng& rng);

/// One independent year: profile plus a stationary ARMA remainder (burn-in
/// from a zero state), then the event drawn from the hazard path.
YearPanel generate_synthetic_year(const SeasonalProfile& profile, const ArmaModel& arma, const ParamVector& truth,
                                  int year, std::uint64_t seed, const HazardModelSpec& spec = {Family::agdd});

/// n_years independent years first_year, first_year + 1, ...; year i uses
/// derive_seed(seed, {stream::synthetic, i}).
std::vector<YearPanel> generate_synthetic_dataset(const SeasonalProfile& profile, const ArmaModel& arma,
                                                  const ParamVector& truth, int n_years, std::uint64_t seed,
                                                  int first_year = 2001, const HazardModelSpec& spec = {Family::agdd});

/// A continuous daily series covering a lead year plus n_years, with tavg
/// rounded to 0.01 degC, and one bloom file per crop analog drawn from the
/// rounded temperatures.
struct SyntheticFixture {
  TemperatureSeries temperature;
  std::vector<std::string> crops;
  std::vector<std::vector<BloomRecord>> blooms;  // parallel to crops
};
SyntheticFixture generate_fixture(int first_year, int n_years, std::uint64_t seed,
                                  const SeasonalProfile& profile = SeasonalProfile::okanagan_like(),
                                  const ArmaModel& arma = ArmaModel::okanagan_arma31());

// ---------------------------------------------------------------------------

struct SimStudyConfig {
  std::vector<int> sizes{30, 80, 150, 400};
  int replicates = 1000;
  ParamVector truth = simulation_truth();
  SeasonalProfile profile = SeasonalProfile::okanagan_like();
  ArmaModel arma = ArmaModel::okanagan_arma31();
  std::uint64_t seed = 0;
  unsigned threads = 0;
  SearchConfig search{};
};

struct SizeEstimates {
  int size = 0;
  int replicates = 0;  // successful fits
  int failed = 0;
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> variance;        // n - 1 denominator
  std::vector<double> standard_error;  // sqrt(variance / replicates)
  std::vector<ParamVector> estimates;  // in replicate order, failures omitted
  std::vector<int> replicate_index;    // parallel to estimates
};

struct SimStudyReport {
  ParamVector truth;
  int requested = 0;
  std::uint64_t seed = 0;
  std::vector<SizeEstimates> sizes;
};

/// Dataset (S, r) is generate_synthetic_dataset(..., S, derive_seed(seed,
/// {stream::simstudy, S, r})). Requires R >= 2.
std::vector<YearPanel> simstudy_dataset(const SimStudyConfig& config, int size, int replicate);
SimStudyReport consistency_study(const SimStudyConfig& config);

// ---------------------------------------------------------------------------

struct CvConfig {
  HazardModelSpec spec{Family::agdd};
  SearchConfig search{};
  ArmaModel arma = ArmaModel::okanagan_arma31();
  SeasonalProfile profile = SeasonalProfile::okanagan_like();
  double variance_scale = 1.0;
  bool oracle = false;          // known held-out temperatures, one path
  int n_paths = 1000;
  int history_days = 30;        // remainders before January 1 fed to the ARMA recursion
  double alpha = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct CvPrediction {
  int year = 0;
  int current_day = 0;  // t_c
  int lag = 0;          // t_c - true bloom day
  int true_day = 0;
  double mean = 0.0;
  int median = 0;
  int mode = 0;
  int lower = 0;
  int upper = 0;
  double tail = 0.0;
  bool covered = false;
};

struct LagPoint {
  int lag = 0;
  int count = 0;
  double mae_median = 0.0;
  double mean_pi_length = 0.0;
};

struct PointErrors {
  double mode = 0.0;
  double median = 0.0;
  double mean = 0.0;
};

struct CvReport {
  int n_years = 0;
  int n_predictions = 0;
  PointErrors rmse, mae;
  double coverage = 0.0;
  double mean_pi_length = 0.0;
  std::vector<int> skipped_years;
  std::vector<std::string> warnings;
  std::vector<LagPoint> lag_curve;  // lags -90..-1
  std::vector<CvPrediction> predictions;
};

/// Leave-one-out over years: each held-out year is predicted from t_c = 0
/// through the day before its bloom with a model fitted to the other years.
/// Distribution (year, t_c) uses seed derive_seed(seed, {stream::cv, year, t_c}).
/// `series` supplies held-out temperatures and the pre-January history.
/// `on_year` receives each held-out year's predictions in year order.
CvReport loo_cv(std::span<const YearPanel> panels, const TemperatureSeries& series, const CvConfig& config,
                const std::function<void(std::span<const CvPrediction>)>& on_year = {});

/// Metrics recomputed from a prediction log.
CvReport summarize_predictions(std::span<const CvPrediction> predictions);

// ---------------------------------------------------------------------------

struct IntervalBaseline {
  double lower = 0.0;
  double upper = 0.0;
  double length = 0.0;
  double coverage_in_sample = 0.0;
  double coverage_loo = 0.0;
};

struct NaiveBaselines {
  int n_years = 0;
  double mean = 0.0;
  double sd = 0.0;
  IntervalBaseline normal;    // mean +- 1.96 sd
  IntervalBaseline quantile;  // type-7 2.5% and 97.5% sample quantiles
  int min = 0;
  int max = 0;
  int range = 0;
};

/// Requires at least 5 uncensored years.
NaiveBaselines naive_baselines(std::span<const BloomRecord> records);

// ---------------------------------------------------------------------------

struct CiValidityConfig {
  SimStudyConfig study{};
  int bootstrap_replicates = 200;
  int current_day = 60;
  int n_paths = 1000;
  double alpha = 0.05;
};

struct CiValidityRow {
  int size = 0;
  int day = 0;                   // fixed future day: mode under the truth
  double true_probability = 0.0;
  double sim_lower = 0.0, sim_upper = 0.0;
  double boot_lower = 0.0, boot_upper = 0.0;
  int sim_replicates = 0;
  int boot_replicates = 0;
  BootstrapSummary bootstrap;    // refits of the first simulation sample
};

struct CiValidityReport {
  std::vector<CiValidityRow> rows;
};

/// Per size: a test year (seed derive_seed(seed, {stream::test_year, S}))
/// with its first `current_day` days observed; the predictive probability of
/// the fixed day under every simulation refit and under bootstrap refits of
/// sample r = 0, all on the same temperature paths. Reuses the fits in
/// `study` when given.
CiValidityReport prediction_ci_validity(const CiValidityConfig& config, const SimStudyReport* study = nullptr);

}  // namespace phenocast
