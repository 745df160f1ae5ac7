#pragma once

// JSON documents for models and reports, CSV tables for series and
// distributions. Field names follow the C++ types.

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phenocast/climate.hpp"
#include "phenocast/estimate.hpp"
#include "phenocast/evaluate.hpp"
#include "phenocast/predict.hpp"

namespace phenocast {

std::string to_json(const ParamVector& params, Family family);
std::string to_json(const SearchConfig& search);
std::string to_json(const FittedModel& model, bool include_trace = true);
std::string to_json(std::span<const RankedModel> ranking);
std::string to_json(const BootstrapSummary& summary);
std::string to_json(const ArmaModel& model);
std::string to_json(const ArmaFit& fit);
std::string to_json(const PredictiveDistribution& dist, const PointSummary* summary);
std::string to_json(const CvReport& report);  // prediction log omitted
std::string to_json(const SimStudyReport& report);
std::string to_json(const NaiveBaselines& baselines);
std::string to_json(const CiValidityReport& report);
std::string to_json(const Diagnostics& diagnostics);

FittedModel fitted_model_from_json(std::string_view text);
BootstrapSummary bootstrap_from_json(std::string_view text);
ArmaModel arma_model_from_json(std::string_view text);
SearchConfig search_config_from_json(std::string_view text);

/// `path_id,day,tavg`, day counted from first_day.
void write_paths_csv(std::ostream& out, std::span<const std::vector<double>> paths, int first_day);
/// `day,mass`.
void write_distribution_csv(std::ostream& out, const PredictiveDistribution& dist);
/// `day,point,lower,upper`.
void write_band_csv(std::ostream& out, const ConfidenceBand& band);
/// `lag,acf_observed,pacf_observed,acf_simulated,pacf_simulated`.
void write_acf_csv(std::ostream& out, const Diagnostics& diagnostics);
/// One row per prediction.
void write_predictions_csv(std::ostream& out, std::span<const CvPrediction> predictions, bool header = true);
std::vector<CvPrediction> parse_predictions_csv(std::string_view text);
/// `lag,count,mae_median,mean_pi_length`.
void write_lag_curve_csv(std::ostream& out, std::span<const LagPoint> curve);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

}  // namespace phenocast
