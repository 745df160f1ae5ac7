#include <cmath>
#include <map>

#include "doctest.h"
#include "phenocast/error.hpp"
#include "phenocast/evaluate.hpp"
#include "phenocast/random.hpp"

using namespace phenocast;

TEST_CASE("draw_event: degenerate hazards") {
  const std::vector<double> t(365, 10.0);
  Rng rng = make_rng(1, {});
  const ParamVector never{-50.0, {0.0}, std::nullopt, 0.0};
  const ParamVector always{50.0, {0.0}, std::nullopt, 0.0};
  for (int i = 0; i < 20; ++i) {
    CHECK(draw_event({Family::agdd}, never, 2001, t, rng) == BloomRecord::censored_at(2001, 365));
    CHECK(draw_event({Family::agdd}, always, 2001, t, rng) == BloomRecord::observed(2001, 1));
  }
}

TEST_CASE("draw_event: empirical histogram matches the mass function") {
  const auto panel = generate_synthetic_year(SeasonalProfile::okanagan_like(), ArmaModel::okanagan_arma31(),
                                             simulation_truth(), 2001, 2);
  const std::vector<double> t(panel.tavg().begin(), panel.tavg().end());
  const auto mass = event_mass(hazard_path({Family::agdd}, t, simulation_truth()));
  Rng rng = make_rng(3, {});
  const int n = 10000;
  std::map<int, int> counts;
  for (int i = 0; i < n; ++i) ++counts[draw_event({Family::agdd}, simulation_truth(), 2001, t, rng).day];
  // Pearson statistic over days with expected count >= 5, pooled remainder.
  double chi2 = 0.0, pooled_e = 0.0, pooled_o = 0.0;
  int cells = 0;
  for (std::size_t d = 0; d < mass.mass.size(); ++d) {
    const double e = n * mass.mass[d];
    const double o = counts.count(static_cast<int>(d) + 1) ? counts[static_cast<int>(d) + 1] : 0;
    if (e >= 5.0) {
      chi2 += (o - e) * (o - e) / e;
      ++cells;
    } else {
      pooled_e += e;
      pooled_o += o;
    }
  }
  if (pooled_e > 0) {
    chi2 += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    ++cells;
  }
  const double dof = cells - 1;
  // Wilson-Hilferty upper 0.1% point.
  const double z = 3.09;
  const double crit = dof * std::pow(1 - 2 / (9 * dof) + z * std::sqrt(2 / (9 * dof)), 3);
  CHECK(chi2 < crit);
}

TEST_CASE("synthetic datasets are reproducible with typical bloom days") {
  const auto a = generate_synthetic_dataset(SeasonalProfile::okanagan_like(), ArmaModel::okanagan_arma31(),
                                            simulation_truth(), 30, 7);
  const auto b = generate_synthetic_dataset(SeasonalProfile::okanagan_like(), ArmaModel::okanagan_arma31(),
                                            simulation_truth(), 30, 7);
  REQUIRE(a.size() == 30);
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].outcome() == b[i].outcome());
    CHECK(a[i].year() == 2001 + static_cast<int>(i));
    mean += a[i].outcome().day;
  }
  mean /= 30.0;
  CHECK(mean > 60.0);
  CHECK(mean < 180.0);
}

TEST_CASE("fixture: one continuous series and one bloom file per crop") {
  const auto fx = generate_fixture(1936, 4, 1);
  CHECK(fx.temperature.first_date() == make_date(1936, 1, 1));
  CHECK(fx.temperature.last_date() == make_date(1940, 12, 31));
  CHECK(fx.temperature.gaps().empty());
  REQUIRE(fx.crops.size() == 6);
  for (const auto& b : fx.blooms) {
    REQUIRE(b.size() == 4);
    CHECK(b.front().year == 1937);
  }
  for (const auto& r : fx.temperature.records()) CHECK(std::abs(r.tavg() * 100 - std::round(r.tavg() * 100)) < 1e-6);
  // Crops ordered earliest to latest on average.
  const auto big = generate_fixture(1936, 30, 2);
  auto mean_day = [&](std::size_t c) {
    double s = 0.0;
    for (const auto& r : big.blooms[c]) s += r.day;
    return s / static_cast<double>(big.blooms[c].size());
  };
  CHECK(mean_day(0) < mean_day(5));
}

TEST_CASE("consistency study bookkeeping") {
  SimStudyConfig c;
  c.sizes = {10};
  c.replicates = 1;
  CHECK_THROWS_AS(consistency_study(c), ValidationError);
  c.replicates = 4;
  c.search = SearchConfig::fast();
  c.threads = 2;
  const auto r = consistency_study(c);
  REQUIRE(r.sizes.size() == 1);
  const auto& s = r.sizes[0];
  CHECK(s.replicates + s.failed == 4);
  // Recompute the moments from the stored estimates.
  double mean = 0.0;
  for (const auto& e : s.estimates) mean += e.a;
  mean /= static_cast<double>(s.estimates.size());
  CHECK(s.mean[0] == doctest::Approx(mean));
  // Dataset (S, r) is available on its own.
  const auto d = simstudy_dataset(c, 10, s.replicate_index[0]);
  CHECK(fit({Family::agdd}, d, c.search).params == s.estimates[0]);
}

TEST_CASE("naive baselines") {
  std::vector<BloomRecord> same;
  for (int y = 0; y < 6; ++y) same.push_back(BloomRecord::observed(1950 + y, 120));
  const auto z = naive_baselines(same);
  CHECK(z.normal.length == 0.0);
  CHECK(z.quantile.length == 0.0);
  CHECK(z.normal.coverage_in_sample == 1.0);
  CHECK(z.range == 0);

  std::vector<BloomRecord> r;
  const std::vector<int> days{110, 112, 113, 115, 118, 120, 125, 140, 111, 114};
  for (std::size_t i = 0; i < days.size(); ++i) r.push_back(BloomRecord::observed(1950 + static_cast<int>(i), days[i]));
  const auto b = naive_baselines(r);
  double mean = 0.0;
  for (int d : days) mean += d;
  mean /= days.size();
  double ss = 0.0;
  for (int d : days) ss += (d - mean) * (d - mean);
  CHECK(b.mean == doctest::Approx(mean));
  CHECK(b.sd == doctest::Approx(std::sqrt(ss / 9.0)));
  CHECK(b.normal.length == doctest::Approx(2 * 1.96 * b.sd));
  CHECK(b.min == 110);
  CHECK(b.max == 140);
  CHECK(b.range == 30);
  CHECK(b.quantile.coverage_loo >= 0.0);
  CHECK(b.quantile.coverage_loo <= 1.0);

  CHECK_THROWS_AS(naive_baselines(std::vector<BloomRecord>(same.begin(), same.begin() + 4)), ValidationError);
}

TEST_CASE("summarize_predictions aggregates errors and lags") {
  std::vector<CvPrediction> p;
  // (t_c, true day, median, lower, upper)
  const int rows[][5] = {{0, 100, 104, 90, 110}, {50, 100, 98, 95, 105}, {99, 100, 100, 99, 101}, {10, 100, 120, 110, 130}};
  for (const auto& r : rows) {
    CvPrediction c;
    c.year = 2001;
    c.current_day = r[0];
    c.true_day = r[1];
    c.lag = r[0] - r[1];
    c.median = c.mode = r[2];
    c.mean = r[2];
    c.lower = r[3];
    c.upper = r[4];
    c.covered = c.lower <= c.true_day && c.true_day <= c.upper;
    p.push_back(c);
  }
  const auto s = summarize_predictions(p);
  CHECK(s.n_predictions == 4);
  CHECK(s.rmse.median == doctest::Approx(std::sqrt((16.0 + 4.0 + 0.0 + 400.0) / 4.0)));
  CHECK(s.mae.median == doctest::Approx((4.0 + 2.0 + 0.0 + 20.0) / 4.0));
  CHECK(s.coverage == doctest::Approx(0.75));
  CHECK(s.mean_pi_length == doctest::Approx((20.0 + 10.0 + 2.0 + 20.0) / 4.0));
  for (const auto& l : s.lag_curve)
    if (l.lag == -1) CHECK(l.count == 1);
    else if (l.lag == -90) CHECK(l.count == 1);
}

TEST_CASE("loo_cv in oracle mode on a small synthetic set") {
  const auto fx = generate_fixture(1990, 6, 3);
  const auto panels = build_panels(fx.temperature, fx.blooms[0]);
  CvConfig cfg;
  cfg.oracle = true;
  cfg.search = SearchConfig::fast();
  std::vector<int> years;
  const auto r = loo_cv(panels, fx.temperature, cfg, [&](std::span<const CvPrediction> y) {
    REQUIRE_FALSE(y.empty());
    years.push_back(y.front().year);
    // Predictions run t_c = 0 .. truth - 1.
    CHECK(y.front().current_day == 0);
    CHECK(y.back().current_day == y.back().true_day - 1);
  });
  CHECK(r.n_years == 6);
  CHECK(years == std::vector<int>{1991, 1992, 1993, 1994, 1995, 1996});
  const auto again = summarize_predictions(r.predictions);
  CHECK(again.rmse.median == doctest::Approx(r.rmse.median));
  CHECK_THROWS_AS(loo_cv(std::span<const YearPanel>(panels).first(2), fx.temperature, cfg), ValidationError);
}
