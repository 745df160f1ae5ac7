#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "phenocast/climate.hpp"
#include "phenocast/error.hpp"

using namespace phenocast;

namespace {

TemperatureSeries seasonal_series(Date first, int days, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> n(0.0, 3.0);
  std::vector<double> v(static_cast<std::size_t>(days));
  for (int i = 0; i < days; ++i) {
    const Date d = add_days(first, i);
    v[static_cast<std::size_t>(i)] = SeasonalProfile::okanagan_like().at(d) + n(g);
  }
  return TemperatureSeries::from_tavg(first, v);
}

}  // namespace

TEST_CASE("seasonal profile: shape of the built-in cycle") {
  const auto p = SeasonalProfile::okanagan_like();
  CHECK(p.at(15) == doctest::Approx(9.5 - 11.0));
  CHECK(p.at(198) > 19.0);
  CHECK(SeasonalProfile::constant(4.0).at(200) == 4.0);
  CHECK_THROWS_AS(p.at(0), ValidationError);
  CHECK_THROWS_AS(p.at(367), ValidationError);
}

TEST_CASE("deseasonalize: day-of-year group means and exact reconstruction") {
  const auto s = seasonal_series(make_date(2003, 1, 1), 365 * 2 + 366 + 40, 1);
  const auto parts = deseasonalize(s);

  // Oracle: group the values by day-of-year directly.
  std::map<int, std::pair<double, int>> groups;
  for (const auto& r : s.records()) {
    auto& g = groups[day_of_year(r.date)];
    g.first += r.tavg();
    ++g.second;
  }
  for (const auto& [doy, g] : groups) CHECK(parts.profile.at(doy) == doctest::Approx(g.first / g.second).epsilon(1e-12));

  const auto back = reseasonalize(s, parts.profile, parts.remainder);
  const auto tavg = s.tavg();
  double worst = 0.0;
  for (std::size_t i = 0; i < tavg.size(); ++i) worst = std::max(worst, std::abs(back[i] - tavg[i]));
  CHECK(worst <= 1e-12);

  CHECK_THROWS_AS(deseasonalize(seasonal_series(make_date(2003, 3, 1), 500, 2)), ValidationError);
}

TEST_CASE("inverse roots and admissibility") {
  CHECK(max_inverse_root(std::vector<double>{0.5}) == doctest::Approx(0.5));
  // 1 - 0.5 z - 0.3 z^2: inverse roots solve l^2 - 0.5 l - 0.3 = 0.
  CHECK(max_inverse_root(std::vector<double>{0.5, 0.3}) == doctest::Approx((0.5 + std::sqrt(1.45)) / 2));
  CHECK(max_inverse_root(std::vector<double>{}) == 0.0);
  CHECK(is_stationary(std::vector<double>{0.9}));
  CHECK_FALSE(is_stationary(std::vector<double>{1.0}));
  CHECK(is_invertible(std::vector<double>{-0.5}));
  CHECK_FALSE(is_invertible(std::vector<double>{1.2}));
  CHECK(is_stationary(ArmaModel::okanagan_arma31().ar));
  CHECK(is_invertible(ArmaModel::okanagan_arma31().ma));
}

TEST_CASE("ARMA model validation") {
  ArmaModel m{{0.5}, {}, 0, 1.0};
  CHECK_NOTHROW(m.validate());
  m.sigma2 = 0.0;
  CHECK_THROWS_AS(m.validate(), ValidationError);
  m = {{1.1}, {}, 0, 1.0};
  CHECK_THROWS_AS(m.validate(), ValidationError);
  m = {{}, {}, -1, 1.0};
  CHECK_THROWS_AS(m.validate(), ValidationError);
}

TEST_CASE("stationary simulation has the AR(1) moments") {
  const ArmaModel m{{0.6}, {}, 0, 2.0};
  const auto x = simulate_stationary(m, 40000, 3);
  const auto s = summarize_series(x);
  CHECK(s.mean == doctest::Approx(0.0).epsilon(0.05).scale(1.0));
  CHECK(s.variance == doctest::Approx(2.0 / (1 - 0.36)).epsilon(0.05));
  const auto acf = sample_acf(x, 3);
  CHECK(acf[0] == doctest::Approx(1.0));
  for (int k = 1; k <= 3; ++k) CHECK(std::abs(acf[static_cast<std::size_t>(k)] - std::pow(0.6, k)) < 0.03);
  const auto pacf = sample_pacf(x, 3);
  CHECK(std::abs(pacf[1] - 0.6) < 0.03);
  CHECK(std::abs(pacf[2]) < 0.03);
  CHECK(simulate_stationary(m, 100, 3) == simulate_stationary(m, 100, 3));
  CHECK_THROWS_AS(simulate_stationary({{0.5}, {}, 1, 1.0}, 10, 1), ValidationError);
}

TEST_CASE("sample ACF matches the textbook formula") {
  const std::vector<double> x{1, 3, 2, 5, 4, 6};
  const double mean = 21.0 / 6.0;
  double c0 = 0, c1 = 0;
  for (std::size_t t = 0; t < x.size(); ++t) c0 += (x[t] - mean) * (x[t] - mean);
  for (std::size_t t = 1; t < x.size(); ++t) c1 += (x[t] - mean) * (x[t - 1] - mean);
  CHECK(sample_acf(x, 1)[1] == doctest::Approx(c1 / c0));
  // PACF at lag 1 equals ACF at lag 1.
  CHECK(sample_pacf(x, 1)[1] == doctest::Approx(c1 / c0));
}

TEST_CASE("CSS fit recovers ARMA(1,1)") {
  const ArmaModel truth{{0.7}, {0.3}, 0, 1.5};
  const auto x = simulate_stationary(truth, 20000, 4);
  const auto f = fit_arma(x, {1, 0, 1});
  CHECK(std::abs(f.model.ar[0] - 0.7) < 0.03);
  CHECK(std::abs(f.model.ma[0] - 0.3) < 0.03);
  CHECK(std::abs(f.model.sigma2 - 1.5) < 0.05);
  CHECK(f.bic == doctest::Approx(-2 * f.loglik + 3 * std::log(static_cast<double>(f.n_effective))));
  CHECK_THROWS_AS(fit_arma(std::vector<double>(150, 0.0), {1, 0, 0}), ValidationError);
}

TEST_CASE("order selection picks a well-separated AR(2)") {
  const ArmaModel truth{{0.6, -0.3}, {}, 0, 1.0};
  const auto x = simulate_stationary(truth, 4000, 5);
  const auto f = select_arma(x, {3, 1, 2});
  CHECK(f.model.order() == ArmaOrder{2, 0, 0});
  CHECK(f.candidates.size() == 4 * 2 * 3);
}

TEST_CASE("one-step residuals of an AR(1) are the innovations") {
  const ArmaModel m{{0.5}, {}, 0, 1.0};
  const std::vector<double> x{1.0, 2.0, 0.5, -1.0};
  const auto e = one_step_residuals(m, x);
  // One residual per value after the first p.
  REQUIRE(e.size() == x.size() - 1);
  for (std::size_t t = 1; t < x.size(); ++t) CHECK(e[t - 1] == doctest::Approx(x[t] - 0.5 * x[t - 1]));
}

TEST_CASE("path generator reproduces batch simulation") {
  const auto m = ArmaModel::okanagan_arma31();
  const std::vector<double> history{1.0, -0.5, 0.25, 2.0};
  PathRequest req;
  req.horizon = 50;
  req.n_paths = 4;
  req.seed = 9;
  const auto batch = simulate_remainder_paths(m, history, req);
  ArmaPathGenerator gen(m, history);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    gen.start(9, i);
    for (int t = 0; t < req.horizon; ++t) CHECK(gen.next() == batch[i][static_cast<std::size_t>(t)]);
  }
  CHECK_THROWS_AS(ArmaPathGenerator(m, std::vector<double>{1.0}), ValidationError);

  req.first_path = 2;
  req.n_paths = 2;
  const auto tail = simulate_remainder_paths(m, history, req);
  CHECK(tail[0] == batch[2]);

  req.start = make_date(2001, 1, 1);
  const auto temps = simulate_paths(m, SeasonalProfile::okanagan_like(), history, req);
  CHECK(temps[0][0] == doctest::Approx(batch[2][0] + SeasonalProfile::okanagan_like().at(1)));
}

TEST_CASE("near-noiseless ARIMA(1,1,0) follows the forecast recursion") {
  // With negligible noise the path is the point forecast: w = diff, w' = phi w.
  const ArmaModel m{{0.5}, {}, 1, 1e-28};
  const std::vector<double> history{0.0, 1.0, 3.0};
  PathRequest req;
  req.horizon = 4;
  const auto path = simulate_remainder_paths(m, history, req)[0];
  double x = 3.0, w = 2.0;
  for (double v : path) {
    w *= 0.5;
    x += w;
    CHECK(v == doctest::Approx(x).epsilon(1e-9));
  }
}

TEST_CASE("diagnostics need enough data") {
  const auto x = simulate_stationary({{0.3}, {}, 0, 1.0}, 500, 6);
  const auto d = diagnostics(x, x, 10);
  CHECK(d.acf_observed == d.acf_simulated);
  CHECK(d.acf_observed.size() == 11);
  CHECK_THROWS_AS(diagnostics(std::vector<double>(20, 1.0), x), ValidationError);
}
