#pragma once

// Seasonal profile plus ARIMA(p, d, q) remainder model for daily mean
// temperature, fitted by conditional sum of squares, and path simulation.

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "phenocast/phenodata.hpp"
#include "phenocast/random.hpp"

namespace phenocast {

/// Mean daily temperature per day-of-year (index 1..366).
struct SeasonalProfile {
  std::array<double, 366> mean{};

  double at(int day_of_year) const;
  double at(const Date& date) const { return at(phenocast::day_of_year(date)); }

  static SeasonalProfile constant(double value);
  /// Smooth annual cycle resembling the Okanagan valley: 9.5 °C annual mean,
  /// 11 °C amplitude, coldest around January 15.
  static SeasonalProfile okanagan_like();
};

struct Deseasonalized {
  SeasonalProfile profile;
  std::vector<double> remainder;  // aligned with series.records()
};

/// Per-day-of-year means over the series (which must hold at least two
/// complete calendar years) and remainder = tavg - profile. Day 366 falls
/// back to day 365 when no leap year is present.
Deseasonalized deseasonalize(const TemperatureSeries& series);
/// profile + remainder on the series dates.
std::vector<double> reseasonalize(const TemperatureSeries& series, const SeasonalProfile& profile,
                                  std::span<const double> remainder);

struct ArmaOrder {
  int p = 0;
  int d = 0;
  int q = 0;
  friend bool operator==(const ArmaOrder&, const ArmaOrder&) = default;
};

/// (1 - sum ar_i B^i) (1 - B)^d X_t = (1 + sum ma_j B^j) Z_t,  Z_t ~ N(0, sigma2).
struct ArmaModel {
  std::vector<double> ar;
  std::vector<double> ma;
  int d = 0;
  double sigma2 = 1.0;

  ArmaOrder order() const { return {static_cast<int>(ar.size()), d, static_cast<int>(ma.size())}; }
  void validate() const;
  /// X_t = 1.83 X_{t-1} - 0.96 X_{t-2} + 0.12 X_{t-3} + Z_t - 0.96 Z_{t-1}, sigma2 = 5.253.
  static ArmaModel okanagan_arma31();
};

/// Largest modulus among the inverse roots of 1 - sum c_i z^i.
double max_inverse_root(std::span<const double> coefficients);
bool is_stationary(std::span<const double> ar);
/// Invertibility of 1 + sum ma_j z^j.
bool is_invertible(std::span<const double> ma);

struct OrderScore {
  ArmaOrder order;
  double bic = 0.0;
  double sigma2 = 0.0;
  bool valid = false;
};

struct ArmaFit {
  ArmaModel model;
  double css = 0.0;          // conditional sum of squares
  int n_effective = 0;
  double loglik = 0.0;       // Gaussian conditional log-likelihood
  double bic = 0.0;          // -2 loglik + (p + q + 1) ln(n_effective)
  std::vector<OrderScore> candidates;  // filled by order selection
};

struct OrderSearch {
  int max_p = 6;
  int max_d = 4;
  int max_q = 6;
};

/// CSS fit of an explicit order. Errors when no stationary and invertible
/// solution is found.
ArmaFit fit_arma(std::span<const double> remainder, ArmaOrder order);
/// BIC selection over 0..max_p x 0..max_d x 0..max_q. All candidates are
/// scored on the same conditioning window (the first max_d + max_p values).
ArmaFit select_arma(std::span<const double> remainder, const OrderSearch& search = {});

/// One-step prediction errors of the model over a level series; the first
/// d + p entries are conditioning values and are omitted.
std::vector<double> one_step_residuals(const ArmaModel& model, std::span<const double> series);

struct PathRequest {
  Date start;                 // date of the first simulated day
  int horizon = 1;            // days per path
  int n_paths = 1;
  std::uint64_t seed = 0;
  double variance_scale = 1.0;
  std::size_t first_path = 0; // global index of the first path (for batching)
};

/// Streams one simulated remainder path at a time from a fixed history so
/// callers can stop early. Path i of a request uses the same draws as
/// simulate_remainder_paths.
class ArmaPathGenerator {
 public:
  /// Requires history.size() >= max(p + d, q).
  ArmaPathGenerator(const ArmaModel& model, std::span<const double> history, double variance_scale = 1.0);

  void start(std::uint64_t master_seed, std::size_t path_index);
  double next();

 private:
  ArmaModel model_;
  double sd_ = 1.0;
  std::vector<double> w0_, e0_, x0_, undiff_;
  std::vector<double> w_, e_, x_;
  Rng rng_;
  std::normal_distribution<double> noise_;
};

/// Simulated remainders continuing `history` (most recent value last).
/// Path i draws from derive_seed(seed, {stream::paths, first_path + i}).
/// Requires history.size() >= max(p + d, q).
std::vector<std::vector<double>> simulate_remainder_paths(const ArmaModel& model, std::span<const double> history,
                                                          const PathRequest& request);
/// Temperature paths: profile on each simulated date plus the remainder.
std::vector<std::vector<double>> simulate_paths(const ArmaModel& model, const SeasonalProfile& profile,
                                                std::span<const double> history, const PathRequest& request);

/// Stationary-start simulation (zero state plus burn-in) for d = 0.
std::vector<double> simulate_stationary(const ArmaModel& model, std::size_t n, std::uint64_t seed,
                                        double variance_scale = 1.0, std::size_t burn_in = 1000);

struct SeriesSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double min = 0.0;
  double max = 0.0;
};
SeriesSummary summarize_series(std::span<const double> x);

/// Sample autocorrelation (mean removed, n denominator) for lags 0..max_lag.
std::vector<double> sample_acf(std::span<const double> x, int max_lag);
/// Partial autocorrelation via Durbin-Levinson; entry 0 is 1.
std::vector<double> sample_pacf(std::span<const double> x, int max_lag);

struct Diagnostics {
  int max_lag = 40;
  std::vector<double> acf_observed, pacf_observed, acf_simulated, pacf_simulated;
  SeriesSummary observed, simulated;
};
Diagnostics diagnostics(std::span<const double> observed, std::span<const double> simulated, int max_lag = 40);

}  // namespace phenocast
