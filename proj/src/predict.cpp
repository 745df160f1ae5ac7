#include "phenocast/predict.hpp"

#include <algorithm>
#include <cmath>

#include "phenocast/error.hpp"
#include "phenocast/parallel.hpp"
#include "phenocast/random.hpp"
#include "phenocast/stats.hpp"

namespace phenocast {

namespace {

// Survival below this is treated as exhausted; the remaining mass is far
// below any reported precision.
constexpr double kSurvivalFloor = 1e-300;

void check_observed(const PredictionContext& ctx) {
  if (ctx.current_day() >= ctx.horizon_day())
    throw ValidationError("no days left to predict: t_c = " + std::to_string(ctx.current_day()));
  for (double v : ctx.observed)
    if (!std::isfinite(v)) throw ValidationError("non-finite observed temperature");
}

CovariateAccumulator observed_state(const HazardModelSpec& spec, const ParamVector& params,
                                    std::span<const double> observed) {
  params.validate(spec.family);
  CovariateAccumulator acc(spec.family, params.t_base, params.gamma.value_or(0.0));
  for (double v : observed) acc.push(v);
  return acc;
}

// Fills row with S_{k-1} P_k from the accumulator state; returns the tail.
template <typename Next>
double path_mass(const CovariateAccumulator& start, const ParamVector& params, std::size_t horizon, Next&& next,
                 double* row) {
  CovariateAccumulator acc = start;
  double survival = 1.0;
  std::size_t k = 0;
  for (; k < horizon && survival >= kSurvivalFloor; ++k) {
    acc.push(next(k));
    const double p = logistic(acc.linear_predictor(params));
    row[k] = survival * p;
    survival *= 1.0 - p;
  }
  if (k < horizon) {
    std::fill(row + k, row + horizon, 0.0);
    survival = 0.0;
  }
  return survival;
}

PredictiveDistribution reduce(int year, int first_day, std::size_t horizon, std::span<const double> matrix,
                              std::span<const double> tails) {
  const std::size_t L = tails.size();
  PredictiveDistribution out;
  out.year = year;
  out.first_day = first_day;
  out.mass.resize(horizon);
  std::vector<double> column(L);
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t l = 0; l < L; ++l) column[l] = matrix[l * horizon + k];
    out.mass[k] = stats::pairwise_sum(column) / static_cast<double>(L);
  }
  out.tail = stats::pairwise_sum(tails) / static_cast<double>(L);
  out.n_paths = static_cast<int>(L);
  out.tail_warning = std::all_of(tails.begin(), tails.end(), [](double t) { return t > 0.5; });
  return out;
}

std::vector<double> simulation_history(const PredictionContext& ctx, const ClimateDriver& driver, bool& padded) {
  std::vector<double> history = driver.history;
  for (std::size_t i = 0; i < ctx.observed.size(); ++i)
    history.push_back(ctx.observed[i] - driver.profile.at(date_from_day_of_year(ctx.year, static_cast<int>(i) + 1)));
  const auto order = driver.arma.order();
  const auto need = static_cast<std::size_t>(std::max(order.p + order.d, order.q));
  padded = history.size() < need;
  if (padded) history.insert(history.begin(), need - history.size(), 0.0);
  return history;
}

}  // namespace

PredictionContext make_context(const FittedModel& fitted, int year, std::vector<double> observed,
                               std::variant<ClimateDriver, KnownFuture> climate, int n_paths, std::uint64_t seed) {
  PredictionContext ctx;
  ctx.spec = fitted.spec;
  ctx.params = fitted.params;
  ctx.year = year;
  ctx.observed = std::move(observed);
  ctx.climate = std::move(climate);
  ctx.n_paths = n_paths;
  ctx.seed = seed;
  return ctx;
}

double PredictiveDistribution::mass_at(int day) const noexcept {
  if (day < first_day || day > last_day()) return 0.0;
  return mass[static_cast<std::size_t>(day - first_day)];
}

double PredictiveDistribution::total() const { return stats::pairwise_sum(mass) + tail; }

PathSet draw_paths(const PredictionContext& ctx) {
  check_observed(ctx);
  const auto horizon = static_cast<std::size_t>(ctx.horizon_day() - ctx.current_day());
  PathSet out;
  if (const auto* known = std::get_if<KnownFuture>(&ctx.climate)) {
    if (known->paths.empty()) throw ValidationError("oracle mode needs at least one temperature path");
    for (const auto& p : known->paths) {
      if (p.size() < horizon)
        throw ValidationError("known temperature path has " + std::to_string(p.size()) + " days; need " +
                              std::to_string(horizon));
      out.paths.emplace_back(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(horizon));
    }
    return out;
  }
  const auto& driver = std::get<ClimateDriver>(ctx.climate);
  if (ctx.n_paths < 100) throw ValidationError("simulated mode needs at least 100 paths");
  const auto history = simulation_history(ctx, driver, out.history_padded);
  PathRequest req;
  req.start = date_from_day_of_year(ctx.year, ctx.current_day() + 1);
  req.horizon = static_cast<int>(horizon);
  req.n_paths = ctx.n_paths;
  req.seed = ctx.seed;
  req.variance_scale = driver.variance_scale;
  out.paths = simulate_paths(driver.arma, driver.profile, history, req);
  return out;
}

PredictiveDistribution distribution_from_paths(const HazardModelSpec& spec, const ParamVector& params, int year,
                                               std::span<const double> observed,
                                               std::span<const std::vector<double>> paths, unsigned threads) {
  const int D = days_in_year(year);
  const int t_c = static_cast<int>(observed.size());
  if (t_c >= D) throw ValidationError("no days left to predict: t_c = " + std::to_string(t_c));
  if (paths.empty()) throw ValidationError("need at least one temperature path");
  const auto horizon = static_cast<std::size_t>(D - t_c);
  for (const auto& p : paths)
    if (p.size() < horizon) throw ValidationError("temperature path shorter than the remaining year");
  const CovariateAccumulator start = observed_state(spec, params, observed);
  std::vector<double> matrix(paths.size() * horizon);
  std::vector<double> tails(paths.size());
  parallel_for(paths.size(), threads, [&](std::size_t l) {
    const auto& path = paths[l];
    tails[l] = path_mass(start, params, horizon, [&](std::size_t k) {
      if (!std::isfinite(path[k])) throw ValidationError("non-finite temperature in path");
      return path[k];
    }, matrix.data() + l * horizon);
  });
  auto out = reduce(year, t_c + 1, horizon, matrix, tails);
  return out;
}

PredictiveDistribution predictive_distribution(const PredictionContext& ctx) {
  check_observed(ctx);
  if (std::holds_alternative<KnownFuture>(ctx.climate)) {
    const auto paths = draw_paths(ctx);
    auto out = distribution_from_paths(ctx.spec, ctx.params, ctx.year, ctx.observed, paths.paths, ctx.threads);
    out.oracle = true;
    out.seed = ctx.seed;
    return out;
  }
  // Simulated mode streams each path so it can stop once survival is spent.
  const auto& driver = std::get<ClimateDriver>(ctx.climate);
  if (ctx.n_paths < 100) throw ValidationError("simulated mode needs at least 100 paths");
  bool padded = false;
  const auto history = simulation_history(ctx, driver, padded);
  const ArmaPathGenerator prototype(driver.arma, history, driver.variance_scale);
  const int t_c = ctx.current_day();
  const auto horizon = static_cast<std::size_t>(ctx.horizon_day() - t_c);
  std::vector<double> seasonal(horizon);
  for (std::size_t k = 0; k < horizon; ++k)
    seasonal[k] = driver.profile.at(date_from_day_of_year(ctx.year, t_c + 1 + static_cast<int>(k)));
  const CovariateAccumulator start = observed_state(ctx.spec, ctx.params, ctx.observed);
  const auto L = static_cast<std::size_t>(ctx.n_paths);
  std::vector<double> matrix(L * horizon);
  std::vector<double> tails(L);
  parallel_for(L, ctx.threads, [&](std::size_t l) {
    ArmaPathGenerator gen = prototype;
    gen.start(ctx.seed, l);
    tails[l] = path_mass(start, ctx.params, horizon, [&](std::size_t k) { return seasonal[k] + gen.next(); },
                         matrix.data() + l * horizon);
  });
  auto out = reduce(ctx.year, t_c + 1, horizon, matrix, tails);
  out.seed = ctx.seed;
  out.history_padded = padded;
  return out;
}

std::vector<double> renormalized_cdf(const PredictiveDistribution& dist) {
  const double total = stats::pairwise_sum(dist.mass);
  std::vector<double> cdf(dist.mass.size());
  double running = 0.0;
  for (std::size_t k = 0; k < cdf.size(); ++k) {
    running += dist.mass[k];
    cdf[k] = total > 0.0 ? std::min(1.0, running / total) : 0.0;
  }
  if (!cdf.empty() && total > 0.0) cdf.back() = 1.0;
  return cdf;
}

PointSummary point_and_interval(const PredictiveDistribution& dist, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (dist.mass.empty()) throw ValidationError("empty predictive distribution");
  const double total = stats::pairwise_sum(dist.mass);
  if (dist.tail >= 0.999 || !(total > 0.0)) throw ComputationError("distribution degenerate beyond horizon");
  const auto cdf = renormalized_cdf(dist);
  auto quantile_day = [&](double level) {
    for (std::size_t k = 0; k < cdf.size(); ++k)
      if (cdf[k] >= level - 1e-12) return dist.first_day + static_cast<int>(k);
    return dist.last_day();
  };
  PointSummary s;
  s.alpha = alpha;
  std::vector<double> weighted(dist.mass.size());
  for (std::size_t k = 0; k < weighted.size(); ++k)
    weighted[k] = static_cast<double>(dist.first_day + static_cast<int>(k)) * dist.mass[k];
  s.mean = stats::pairwise_sum(weighted) / total;
  s.median = quantile_day(0.5);
  s.mode = dist.first_day +
           static_cast<int>(std::max_element(dist.mass.begin(), dist.mass.end()) - dist.mass.begin());
  s.lower = quantile_day(alpha / 2.0);
  s.upper = quantile_day(1.0 - alpha / 2.0);
  return s;
}

ConfidenceBand bootstrap_band(const PredictionContext& ctx, const BootstrapSummary& bootstrap, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (bootstrap.replicates.empty()) throw ValidationError("bootstrap band needs replicates");
  if (bootstrap.spec.family != ctx.spec.family) throw ValidationError("bootstrap family does not match the model");
  const auto paths = draw_paths(ctx);
  const auto point = distribution_from_paths(ctx.spec, ctx.params, ctx.year, ctx.observed, paths.paths, ctx.threads);
  std::vector<PredictiveDistribution> reps(bootstrap.replicates.size());
  for (std::size_t r = 0; r < reps.size(); ++r)
    reps[r] = distribution_from_paths(ctx.spec, bootstrap.replicates[r], ctx.year, ctx.observed, paths.paths,
                                      ctx.threads);
  if (std::all_of(reps.begin(), reps.end(), [](const auto& d) { return d.tail >= 0.999; }))
    throw ComputationError("all bootstrap predictive distributions are degenerate");
  ConfidenceBand band;
  band.first_day = point.first_day;
  band.point = point.mass;
  band.alpha = alpha;
  band.replicates = static_cast<int>(reps.size());
  const std::size_t H = point.mass.size();
  band.lower.resize(H);
  band.upper.resize(H);
  std::vector<double> values(reps.size());
  for (std::size_t k = 0; k < H; ++k) {
    for (std::size_t r = 0; r < reps.size(); ++r) values[r] = reps[r].mass[k];
    std::sort(values.begin(), values.end());
    band.lower[k] = stats::quantile_sorted(values, alpha / 2.0);
    band.upper[k] = stats::quantile_sorted(values, 1.0 - alpha / 2.0);
  }
  return band;
}

}  // namespace phenocast
