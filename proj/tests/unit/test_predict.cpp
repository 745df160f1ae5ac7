#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "phenocast/error.hpp"
#include "phenocast/evaluate.hpp"
#include "phenocast/predict.hpp"

using namespace phenocast;

namespace {

PredictiveDistribution handmade(std::vector<double> mass, double tail, int first_day = 1) {
  PredictiveDistribution d;
  d.year = 2001;
  d.first_day = first_day;
  d.mass = std::move(mass);
  d.tail = tail;
  return d;
}

PredictionContext simulated_context(int t_c, int paths, std::uint64_t seed) {
  const auto panel = generate_synthetic_year(SeasonalProfile::okanagan_like(), ArmaModel::okanagan_arma31(),
                                             simulation_truth(), 2005, 77);
  PredictionContext ctx;
  ctx.spec = {Family::agdd};
  ctx.params = simulation_truth();
  ctx.year = 2005;
  ctx.observed.assign(panel.tavg().begin(), panel.tavg().begin() + t_c);
  ctx.climate = ClimateDriver{ArmaModel::okanagan_arma31(), SeasonalProfile::okanagan_like(), {}, 1.0};
  ctx.n_paths = paths;
  ctx.seed = seed;
  return ctx;
}

}  // namespace

TEST_CASE("point summaries on a hand-made distribution") {
  // Days 1..5 with a tail of 0.5: renormalized mass (0.1, 0.3, 0.3, 0.2, 0.1).
  const auto d = handmade({0.05, 0.15, 0.15, 0.1, 0.05}, 0.5, 11);
  const auto s = point_and_interval(d, 0.2);
  CHECK(s.mode == 12);  // tie between 12 and 13 goes to the earlier day
  // Renormalized CDF: 0.1, 0.4, 0.7, 0.9, 1.0.
  CHECK(s.median == 13);
  CHECK(s.lower == 11);
  CHECK(s.upper == 14);
  CHECK(s.mean == doctest::Approx(11 * 0.1 + 12 * 0.3 + 13 * 0.3 + 14 * 0.2 + 15 * 0.1));
  CHECK(s.pi_length() == 3);
  CHECK(s.covers(14));
  CHECK_FALSE(s.covers(15));
  const auto cdf = renormalized_cdf(d);
  CHECK(cdf.back() == doctest::Approx(1.0));
  CHECK_THROWS_AS(point_and_interval(handmade({0.0005}, 0.9995)), ComputationError);
}

TEST_CASE("quantiles use the smallest day reaching the level") {
  const auto d = handmade({0.25, 0.25, 0.25, 0.25}, 0.0);
  const auto s = point_and_interval(d, 0.5);
  CHECK(s.median == 2);
  CHECK(s.lower == 1);
  CHECK(s.upper == 3);
}

TEST_CASE("mixture over paths is the average of single-path distributions") {
  std::mt19937_64 g(5);
  std::normal_distribution<double> n(0.0, 3.0);
  const int year = 2003, t_c = 40, D = days_in_year(year);
  std::vector<double> observed(static_cast<std::size_t>(t_c));
  for (int t = 0; t < t_c; ++t) observed[static_cast<std::size_t>(t)] = SeasonalProfile::okanagan_like().at(t + 1) + n(g);
  std::vector<std::vector<double>> paths(3, std::vector<double>(static_cast<std::size_t>(D - t_c)));
  for (auto& p : paths)
    for (std::size_t t = 0; t < p.size(); ++t) p[t] = SeasonalProfile::okanagan_like().at(t_c + 1 + static_cast<int>(t)) + n(g);
  const auto& truth = simulation_truth();
  const auto mix = distribution_from_paths({Family::agdd}, truth, year, observed, paths);
  std::vector<double> avg(mix.mass.size(), 0.0);
  double tail = 0.0;
  for (const auto& p : paths) {
    const auto one = distribution_from_paths({Family::agdd}, truth, year, observed, std::vector<std::vector<double>>{p});
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += one.mass[i] / 3.0;
    tail += one.tail / 3.0;
  }
  for (std::size_t i = 0; i < avg.size(); ++i) CHECK(mix.mass[i] == doctest::Approx(avg[i]).epsilon(1e-12));
  CHECK(mix.tail == doctest::Approx(tail));
  CHECK(mix.total() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mix.first_day == t_c + 1);
  CHECK(mix.last_day() == D);
}

TEST_CASE("simulated predictive distributions are seeded and thread-independent") {
  auto ctx = simulated_context(50, 200, 3);
  const auto a = predictive_distribution(ctx);
  ctx.threads = 4;
  const auto b = predictive_distribution(ctx);
  CHECK(a.mass == b.mass);
  CHECK(a.tail == b.tail);
  CHECK(std::abs(a.total() - 1.0) < 1e-12);
  ctx.seed = 4;
  CHECK(predictive_distribution(ctx).mass != a.mass);

  // Paths drawn separately give the same distribution.
  const auto paths = draw_paths(ctx);
  CHECK(paths.paths.size() == 200);
  CHECK(paths.paths[0].size() == static_cast<std::size_t>(days_in_year(2005) - 50));
  const auto c = distribution_from_paths(ctx.spec, ctx.params, ctx.year, ctx.observed, paths.paths);
  const auto d = predictive_distribution(ctx);
  for (std::size_t i = 0; i < c.mass.size(); ++i) CHECK(c.mass[i] == doctest::Approx(d.mass[i]).epsilon(1e-12));
}

TEST_CASE("prediction input validation") {
  auto ctx = simulated_context(30, 50, 1);
  CHECK_THROWS_AS(predictive_distribution(ctx), ValidationError);
  ctx = simulated_context(30, 100, 1);
  ctx.climate = KnownFuture{{std::vector<double>(10, 1.0)}};
  CHECK_THROWS_AS(predictive_distribution(ctx), ValidationError);
}

TEST_CASE("short history is zero-padded and flagged") {
  auto ctx = simulated_context(0, 100, 1);
  std::get<ClimateDriver>(ctx.climate).history = {0.5};
  const auto d = predictive_distribution(ctx);
  CHECK(d.history_padded);
  std::get<ClimateDriver>(ctx.climate).history = std::vector<double>(30, 0.5);
  CHECK_FALSE(predictive_distribution(ctx).history_padded);
}

TEST_CASE("cold climates trigger the tail warning") {
  auto ctx = simulated_context(0, 100, 1);
  std::get<ClimateDriver>(ctx.climate).profile = SeasonalProfile::constant(-30.0);
  const auto d = predictive_distribution(ctx);
  CHECK(d.tail_warning);
  CHECK(d.tail > 0.99);
  CHECK(std::abs(d.total() - 1.0) < 1e-12);
}

TEST_CASE("bootstrap band brackets the replicate masses") {
  auto ctx = simulated_context(60, 100, 2);
  BootstrapSummary boot;
  boot.spec = {Family::agdd};
  for (int r = 0; r < 20; ++r) {
    ParamVector p = simulation_truth();
    p.a += 0.05 * (r - 10);
    boot.replicates.push_back(p);
  }
  const auto band = bootstrap_band(ctx, boot, 0.1);
  CHECK(band.replicates == 20);
  for (std::size_t i = 0; i < band.point.size(); ++i) {
    CHECK(band.lower[i] <= band.upper[i]);
    CHECK(band.lower[i] >= 0.0);
  }
  double total = 0.0;
  for (double v : band.point) total += v;
  CHECK(total <= 1.0 + 1e-12);
}
