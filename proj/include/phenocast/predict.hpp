#pragma once

// Plug-in Monte Carlo predictive distribution of the event day, given the
// temperatures observed so far in the target year.

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "phenocast/climate.hpp"
#include "phenocast/estimate.hpp"

namespace phenocast {

/// Simulated future temperatures.
struct ClimateDriver {
  ArmaModel arma;
  SeasonalProfile profile;
  /// Remainders (tavg - profile) for the days before January 1 of the
  /// target year, oldest first. May be empty.
  std::vector<double> history;
  double variance_scale = 1.0;
};

/// Known future temperatures (oracle mode). Each path holds tavg for days
/// t_c + 1 .. end of year.
struct KnownFuture {
  std::vector<std::vector<double>> paths;
};

struct PredictionContext {
  HazardModelSpec spec;
  ParamVector params;
  int year = 0;
  std::vector<double> observed;  // tavg for days 1..t_c; no event yet
  std::variant<ClimateDriver, KnownFuture> climate;
  int n_paths = 1000;            // simulated mode only, >= 100
  std::uint64_t seed = 0;
  unsigned threads = 1;

  int current_day() const noexcept { return static_cast<int>(observed.size()); }
  int horizon_day() const { return days_in_year(year); }
};

PredictionContext make_context(const FittedModel& fitted, int year, std::vector<double> observed,
                               std::variant<ClimateDriver, KnownFuture> climate, int n_paths, std::uint64_t seed);

struct PredictiveDistribution {
  int year = 0;
  int first_day = 1;          // t_c + 1
  std::vector<double> mass;   // days first_day .. end of year
  double tail = 0.0;          // P(T > end of year)
  int n_paths = 0;
  std::uint64_t seed = 0;
  bool oracle = false;
  bool tail_warning = false;  // every path left more than half its mass beyond the year
  bool history_padded = false;

  int last_day() const noexcept { return first_day + static_cast<int>(mass.size()) - 1; }
  double mass_at(int day) const noexcept;
  double total() const;  // sum of mass plus tail
};

/// Temperature paths for days t_c + 1 .. end of year, as used by
/// predictive_distribution. In simulated mode path l draws from
/// derive_seed(seed, {stream::paths, l}).
struct PathSet {
  std::vector<std::vector<double>> paths;
  bool history_padded = false;
};
PathSet draw_paths(const PredictionContext& ctx);

PredictiveDistribution predictive_distribution(const PredictionContext& ctx);

/// Exact mixture over given future temperature paths: each path contributes
/// equally, and survival through the observed days is conditioned on.
PredictiveDistribution distribution_from_paths(const HazardModelSpec& spec, const ParamVector& params, int year,
                                               std::span<const double> observed,
                                               std::span<const std::vector<double>> paths, unsigned threads = 1);

struct PointSummary {
  double mean = 0.0;
  int median = 0;
  int mode = 0;
  int lower = 0;
  int upper = 0;
  double alpha = 0.05;
  int pi_length() const noexcept { return upper - lower; }
  bool covers(int day) const noexcept { return lower <= day && day <= upper; }
};

/// Tail-renormalized summaries. Quantiles are the smallest day whose
/// renormalized CDF reaches the level; the mode breaks ties toward the
/// earliest day. Errors when tail >= 0.999.
PointSummary point_and_interval(const PredictiveDistribution& dist, double alpha = 0.05);

/// Renormalized CDF over the support.
std::vector<double> renormalized_cdf(const PredictiveDistribution& dist);

struct ConfidenceBand {
  int first_day = 1;
  std::vector<double> point;  // distribution under ctx.params
  std::vector<double> lower;
  std::vector<double> upper;
  double alpha = 0.05;
  int replicates = 0;
};

/// Per-day quantile band of the predictive mass across bootstrap parameter
/// replicates, all evaluated on the same temperature paths.
ConfidenceBand bootstrap_band(const PredictionContext& ctx, const BootstrapSummary& bootstrap, double alpha = 0.05);

}  // namespace phenocast
