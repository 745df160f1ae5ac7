#pragma once

// Maximum likelihood for the hazard model. The likelihood is piecewise
// smooth in t_base, so t_base (and gamma) are profiled on a grid while the
// intercept and slopes are maximized by Newton ascent at each grid point.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phenocast/hazard.hpp"

namespace phenocast {

/// Inclusive arithmetic grid lo, lo + step, ..., hi.
struct GridRange {
  double lo = 0.0;
  double hi = 0.0;
  double step = 1.0;

  std::vector<double> points() const;
  /// Parses "lo:hi:step".
  static GridRange parse(std::string_view text);
  std::string to_string() const;
  friend bool operator==(const GridRange&, const GridRange&) = default;
};

struct SearchConfig {
  GridRange t_base{-20.0, 15.0, 0.05};
  GridRange gamma{0.0, 1.0, 0.005};
  /// One-parameter families: stride 1 scans every t_base point. A larger
  /// stride scans every stride-th point, then the full-resolution grid around
  /// the `refine_peaks` best coarse local maxima.
  int tbase_stride = 1;
  int refine_peaks = 3;
  /// ExpSmooth: the joint (t_base, gamma) scan visits every stride-th point
  /// of each grid, then the full-resolution grids around the best cell.
  int joint_tbase_stride = 10;
  int joint_gamma_stride = 1;
  /// Golden-section pass on the bracket around the best grid point.
  bool refine = true;
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;

  /// Coarse-to-fine search for large simulation studies.
  static SearchConfig fast() {
    SearchConfig c;
    c.tbase_stride = 10;
    c.joint_gamma_stride = 10;
    return c;
  }

  friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

struct TracePoint {
  double t_base = 0.0;
  double gamma = 0.0;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct FittedModel {
  HazardModelSpec spec;
  ParamVector params;
  double loglik = 0.0;
  int n_years = 0;
  double bic = 0.0;
  // Set when the optimum sits on a flat or separated ridge (e.g. a single
  // year), or the data are degenerate (identical event days and covariates).
  bool weakly_identified = false;
  bool degenerate = false;
  int nonconverged_points = 0;
  std::vector<TracePoint> trace;
};

/// k ln(n) - 2 loglik.
double bic_value(int parameter_count, int n_years, double loglik);

FittedModel fit(const HazardModelSpec& spec, std::span<const YearPanel> panels, const SearchConfig& search = {});

struct RankedModel {
  HazardModelSpec spec;
  std::optional<FittedModel> fitted;
  std::string error;  // set when the fit failed
};

/// Fits every spec and orders successful fits by ascending BIC (ties: fewer
/// parameters first). Failed fits follow in input order.
std::vector<RankedModel> bic_compare(std::span<const HazardModelSpec> specs, std::span<const YearPanel> panels,
                                     const SearchConfig& search = {}, unsigned threads = 0);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double standard_error = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct BootstrapSummary {
  HazardModelSpec spec;
  std::vector<ParamVector> replicates;
  int requested = 0;
  int failed = 0;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::vector<ParameterSummary> parameters;
};

struct BootstrapOptions {
  int replicates = 1000;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  unsigned threads = 0;
  SearchConfig search{};
};

/// Resamples whole year panels with replacement and refits. Replicate r uses
/// the stream derive_seed(seed, {stream::bootstrap, r}); failed refits are
/// dropped and counted. Throws when more than 5% fail.
BootstrapSummary bootstrap(const HazardModelSpec& spec, std::span<const YearPanel> panels,
                           const BootstrapOptions& options);

/// Per-parameter SE (n - 1 variance), type-7 alpha/2 and 1 - alpha/2
/// quantiles, and observed range. Independent of replicate order.
std::vector<ParameterSummary> summarize_replicates(Family family, std::span<const ParamVector> replicates,
                                                   double alpha);

namespace detail {

/// Person-day rows for a fixed (t_base, gamma). Consecutive non-event days
/// of a year with identical covariates share one row with a count weight.
struct Design {
  int width = 1;
  std::vector<double> x;          // rows * width, row-major
  std::vector<std::uint8_t> y;    // 1 on event days
  std::vector<double> w;          // number of exposure days in the row
  std::size_t rows() const noexcept { return y.size(); }
};

Design build_design(Family family, std::span<const YearPanel> panels, double t_base, double gamma);

struct DesignEval {
  double loglik = 0.0;
  std::vector<double> gradient;     // d loglik / d coef
  std::vector<double> information;  // -Hessian, row-major
};

/// coef = (a, b...) with size width + 1.
DesignEval evaluate_design(const Design& design, std::span<const double> coef);

struct InnerFit {
  std::vector<double> coef;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Newton ascent with step halving. Converged when the largest gradient
/// component, or the gradient norm in the inverse-information metric,
/// drops below `tolerance`. Columns that are identically zero keep a zero
/// coefficient.
InnerFit maximize_coefficients(const Design& design, std::span<const double> start, int max_iterations,
                               double tolerance);

}  // namespace detail

}  // namespace phenocast
