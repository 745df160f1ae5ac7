#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "phenocast/error.hpp"
#include "phenocast/serialize.hpp"

using namespace phenocast;
using json = nlohmann::json;

TEST_CASE("format_double is shortest round-trip") {
  for (double v : {0.1, -13.0, 1e-300, 3.5, 0.04, 123456.789, std::nextafter(1.0, 2.0)}) {
    const auto s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("fitted model JSON round trip") {
  FittedModel m;
  m.spec = {Family::exp_smooth};
  m.params = {-12.25, {0.0371}, 0.015, 3.45};
  m.loglik = -101.5;
  m.n_years = 30;
  m.bic = 213.6;
  m.trace.push_back({3.4, 0.01, -102.0, true, 7});
  const auto back = fitted_model_from_json(to_json(m));
  CHECK(back.spec == m.spec);
  CHECK(back.params == m.params);
  CHECK(back.loglik == m.loglik);
  CHECK(back.n_years == 30);
  const auto j = json::parse(to_json(m, false));
  CHECK_FALSE(j.contains("trace"));
  CHECK_THROWS(fitted_model_from_json("{\"spec\": {}}"));
}

TEST_CASE("bootstrap and ARMA JSON round trips") {
  BootstrapSummary b;
  b.spec = {Family::agdd};
  b.replicates = {{-13.0, {0.04}, std::nullopt, 3.5}, {-12.0, {0.038}, std::nullopt, 3.3}};
  b.requested = 2;
  b.seed = 99;
  const auto bb = bootstrap_from_json(to_json(b));
  CHECK(bb.replicates == b.replicates);
  CHECK(bb.seed == 99);

  const auto a = ArmaModel::okanagan_arma31();
  const auto ab = arma_model_from_json(to_json(a));
  CHECK(ab.ar == a.ar);
  CHECK(ab.ma == a.ma);
  CHECK(ab.sigma2 == a.sigma2);
  ArmaFit f;
  f.model = a;
  CHECK(arma_model_from_json(to_json(f)).ar == a.ar);
}

TEST_CASE("search config round trip") {
  auto s = SearchConfig::fast();
  s.t_base = {-5.0, 10.0, 0.1};
  CHECK(search_config_from_json(to_json(s)) == s);
}

TEST_CASE("prediction log CSV round trip") {
  CvPrediction p;
  p.year = 1950;
  p.current_day = 30;
  p.true_day = 120;
  p.lag = -90;
  p.mean = 119.25;
  p.median = 119;
  p.mode = 118;
  p.lower = 104;
  p.upper = 133;
  p.tail = 1e-5;
  p.covered = true;
  std::ostringstream out;
  write_predictions_csv(out, std::vector<CvPrediction>{p, p});
  const auto back = parse_predictions_csv(out.str());
  REQUIRE(back.size() == 2);
  CHECK(back[1].mean == p.mean);
  CHECK(back[1].tail == p.tail);
  CHECK(back[1].covered);
  CHECK(back[1].lag == -90);
}

TEST_CASE("distribution JSON totals and CSV rows") {
  PredictiveDistribution d;
  d.year = 2001;
  d.first_day = 100;
  d.mass = {0.25, 0.5, 0.25};
  d.tail = 0.0;
  const auto j = json::parse(to_json(d, nullptr));
  CHECK(j.at("first_day") == 100);
  CHECK(j.at("last_day") == 102);
  CHECK(j.at("total").get<double>() == doctest::Approx(1.0));
  std::ostringstream out;
  write_distribution_csv(out, d);
  CHECK(out.str() == "day,mass\n100,0.25\n101,0.5\n102,0.25\n");
}
