#pragma once

// Discrete-time hazard model: P_t = logistic(f(X_t; beta)), with X_t one of
// four growing-degree-day transforms.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phenocast/phenodata.hpp"

namespace phenocast {

enum class Family { agdd, exp_smooth, gdd, five_days };
enum class Link { logit };

std::string_view to_string(Family family);
/// Accepts "agdd", "expsmooth", "gdd", "5days".
Family parse_family(std::string_view name);
inline constexpr std::array<Family, 4> all_families{Family::agdd, Family::exp_smooth, Family::gdd,
                                                   Family::five_days};

/// Number of slope coefficients: 5 for FiveDays, 1 otherwise.
int covariate_width(Family family);

struct HazardModelSpec {
  Family family = Family::agdd;
  Link link = Link::logit;

  /// Full parameter dimension (intercept, slopes, gamma, t_base).
  int parameter_count() const;
  friend bool operator==(const HazardModelSpec&, const HazardModelSpec&) = default;
};

/// Model parameters. `b` holds one slope, or b1..b5 for FiveDays (b1 is the
/// weight on the current day). `gamma` is set only for ExpSmooth.
struct ParamVector {
  double a = 0.0;
  std::vector<double> b{0.0};
  std::optional<double> gamma;
  double t_base = 0.0;

  /// Throws ValidationError on a dimension mismatch, non-finite entry, or
  /// gamma outside [0, 1].
  void validate(Family family) const;
  /// Flat order: a, b..., [gamma], t_base.
  std::vector<double> flatten() const;
  static ParamVector unflatten(Family family, std::span<const double> values);
  static std::vector<std::string> names(Family family);

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

/// Streams daily mean temperatures and maintains the covariate of one family.
/// ExpSmooth uses x_t = gdd_t + (1 - gamma) x_{t-1}, which expands to the
/// geometric sum over all earlier days. FiveDays lags before day 1 are zero.
class CovariateAccumulator {
 public:
  CovariateAccumulator(Family family, double t_base, double gamma = 0.0);

  void push(double tavg);
  int width() const noexcept { return width_; }
  int days() const noexcept { return days_; }
  /// Covariate after the last push; (gdd_t, ..., gdd_{t-4}) for FiveDays.
  std::span<const double> value() const noexcept { return {value_.data(), static_cast<std::size_t>(width_)}; }
  double linear_predictor(const ParamVector& params) const;

 private:
  Family family_;
  double t_base_;
  double decay_;
  int width_;
  int days_ = 0;
  std::array<double, 5> value_{};
};

/// Covariate of `family` at day t (1-based) of the panel.
std::vector<double> covariate(Family family, const YearPanel& panel, const ParamVector& params, int t);

/// Row-major day-by-covariate matrix for days 1..n_days of a temperature path.
struct CovariatePath {
  int width = 1;
  std::vector<double> values;
  std::size_t rows() const noexcept { return values.size() / static_cast<std::size_t>(width); }
};
CovariatePath covariate_path(Family family, std::span<const double> tavg, double t_base, double gamma,
                             std::size_t n_days);

double logistic(double x) noexcept;
/// log(1 + e^x) without overflow.
double softplus(double x) noexcept;

struct HazardPath {
  std::vector<double> probability;  // P_t for t = 1..n
};

HazardPath hazard_path(const HazardModelSpec& spec, std::span<const double> tavg, const ParamVector& params);
HazardPath hazard_path(const HazardModelSpec& spec, const YearPanel& panel, const ParamVector& params);

/// P(T = t) = P_t prod_{s<t} (1 - P_s) over the path, plus P(T > n).
struct EventMass {
  std::vector<double> mass;
  double tail = 0.0;
};
EventMass event_mass(const HazardPath& path);

/// Sum over years of log P_T + sum_{s<T} log(1 - P_s); censored years
/// contribute sum_{s<=c} log(1 - P_s).
double log_likelihood(const HazardModelSpec& spec, std::span<const YearPanel> panels, const ParamVector& params);

}  // namespace phenocast
