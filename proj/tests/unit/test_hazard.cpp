#include <cmath>
#include <random>

#include "doctest.h"
#include "phenocast/error.hpp"
#include "phenocast/hazard.hpp"

using namespace phenocast;

namespace {

// Direct geometric-sum form of the smoothed covariate.
double exp_smooth_direct(const std::vector<double>& t, double tb, double gamma, std::size_t day) {
  double x = 0.0;
  for (std::size_t s = 0; s <= day; ++s) x += std::pow(1.0 - gamma, static_cast<double>(day - s)) * gdd(t[s], tb);
  return x;
}

std::vector<double> temps(std::size_t n, unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(-8.0, 22.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(g);
  return v;
}

}  // namespace

TEST_CASE("family names and dimensions") {
  for (Family f : all_families) CHECK(parse_family(to_string(f)) == f);
  CHECK(parse_family("5days") == Family::five_days);
  CHECK_THROWS_AS(parse_family("linear"), ValidationError);
  CHECK(HazardModelSpec{Family::agdd}.parameter_count() == 3);
  CHECK(HazardModelSpec{Family::exp_smooth}.parameter_count() == 4);
  CHECK(HazardModelSpec{Family::gdd}.parameter_count() == 3);
  CHECK(HazardModelSpec{Family::five_days}.parameter_count() == 7);
}

TEST_CASE("ParamVector validation and flat order") {
  ParamVector p{-1.0, {0.1}, 0.3, 2.0};
  CHECK_NOTHROW(p.validate(Family::exp_smooth));
  CHECK_THROWS_AS(p.validate(Family::agdd), ValidationError);
  p.gamma = 1.5;
  CHECK_THROWS_AS(p.validate(Family::exp_smooth), ValidationError);
  p.gamma = 0.3;
  CHECK(p.flatten() == std::vector<double>{-1.0, 0.1, 0.3, 2.0});
  CHECK(ParamVector::unflatten(Family::exp_smooth, p.flatten()) == p);
  CHECK(ParamVector::names(Family::five_days).size() == 7);
  ParamVector bad{std::nan(""), {0.1}, std::nullopt, 2.0};
  CHECK_THROWS_AS(bad.validate(Family::agdd), ValidationError);
}

TEST_CASE("covariates match direct formulas") {
  const auto t = temps(60, 1);
  const double tb = 3.0, gamma = 0.2;
  const YearPanel panel(2001, t, BloomRecord::observed(2001, 60));
  const ParamVector es{0.0, {0.0}, gamma, tb};
  const ParamVector five{0.0, {0, 0, 0, 0, 0}, std::nullopt, tb};
  for (int day : {1, 2, 5, 30, 60}) {
    const auto i = static_cast<std::size_t>(day - 1);
    CHECK(covariate(Family::exp_smooth, panel, es, day)[0] == doctest::Approx(exp_smooth_direct(t, tb, gamma, i)));
    const auto x = covariate(Family::five_days, panel, five, day);
    for (std::size_t k = 0; k < 5; ++k) CHECK(x[k] == (i >= k ? gdd(t[i - k], tb) : 0.0));
  }
}

TEST_CASE("softplus and logistic are stable at extremes") {
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(logistic(-800.0) == 0.0);
  CHECK(logistic(800.0) == 1.0);
}

TEST_CASE("event mass is a distribution and the likelihood is its log") {
  const auto t = temps(200, 2);
  const ParamVector p{-8.0, {0.003}, std::nullopt, 2.0};
  const HazardModelSpec spec{Family::agdd};
  const auto path = hazard_path(spec, t, p);
  const auto m = event_mass(path);
  double total = m.tail;
  for (double v : m.mass) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  for (int day : {1, 50, 137}) {
    const YearPanel panel(2001, t, BloomRecord::observed(2001, day));
    CHECK(log_likelihood(spec, std::vector<YearPanel>{panel}, p) ==
          doctest::Approx(std::log(m.mass[static_cast<std::size_t>(day - 1)])).epsilon(1e-12));
  }
  // Censoring at the end of the path gives the tail.
  const YearPanel cens(2001, t, BloomRecord::censored_at(2001, 200));
  CHECK(log_likelihood(spec, std::vector<YearPanel>{cens}, p) == doctest::Approx(std::log(m.tail)).epsilon(1e-12));
}

TEST_CASE("log-likelihood stays finite for near-certain hazards") {
  const auto t = temps(100, 3);
  const ParamVector p{60.0, {0.0}, std::nullopt, 0.0};
  const YearPanel late(2001, t, BloomRecord::observed(2001, 80));
  const double ll = log_likelihood({Family::agdd}, std::vector<YearPanel>{late}, p);
  CHECK(std::isfinite(ll));
  CHECK(ll == doctest::Approx(-79.0 * 60.0).epsilon(1e-9));
}

TEST_CASE("CovariateAccumulator streams the batch covariate path") {
  const auto t = temps(30, 4);
  for (Family f : all_families) {
    const auto path = covariate_path(f, t, 1.5, 0.4, t.size());
    CovariateAccumulator acc(f, 1.5, 0.4);
    for (std::size_t d = 0; d < t.size(); ++d) {
      acc.push(t[d]);
      for (int k = 0; k < acc.width(); ++k)
        CHECK(acc.value()[static_cast<std::size_t>(k)] ==
              doctest::Approx(path.values[d * static_cast<std::size_t>(path.width) + static_cast<std::size_t>(k)]));
    }
  }
}
