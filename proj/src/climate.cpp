#include "phenocast/climate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <map>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "phenocast/error.hpp"
#include "phenocast/random.hpp"
#include "phenocast/stats.hpp"

namespace phenocast {

double SeasonalProfile::at(int doy) const {
  if (doy < 1 || doy > 366) throw ValidationError("day-of-year out of range");
  return mean[static_cast<std::size_t>(doy - 1)];
}

SeasonalProfile SeasonalProfile::constant(double value) {
  SeasonalProfile p;
  p.mean.fill(value);
  return p;
}

SeasonalProfile SeasonalProfile::okanagan_like() {
  SeasonalProfile p;
  for (int doy = 1; doy <= 366; ++doy)
    p.mean[static_cast<std::size_t>(doy - 1)] =
        9.5 - 11.0 * std::cos(2.0 * std::numbers::pi * (doy - 15) / 365.25);
  return p;
}

Deseasonalized deseasonalize(const TemperatureSeries& series) {
  std::map<int, int> per_year;
  for (const auto& r : series.records()) ++per_year[year_of(r.date)];
  int complete = 0;
  for (const auto& [year, count] : per_year)
    if (count == days_in_year(year)) ++complete;
  if (complete < 2) throw ValidationError("deseasonalize needs at least 2 complete calendar years");

  std::array<std::vector<double>, 366> slots;
  for (const auto& r : series.records()) slots[static_cast<std::size_t>(day_of_year(r.date) - 1)].push_back(r.tavg());
  Deseasonalized out;
  for (std::size_t i = 0; i < 366; ++i) {
    if (!slots[i].empty()) {
      out.profile.mean[i] = stats::mean(slots[i]);
    } else if (i == 365) {
      out.profile.mean[i] = out.profile.mean[364];
    } else {
      throw ValidationError("no observations for day-of-year " + std::to_string(i + 1));
    }
  }
  out.remainder.reserve(series.size());
  for (const auto& r : series.records()) out.remainder.push_back(r.tavg() - out.profile.at(r.date));
  return out;
}

std::vector<double> reseasonalize(const TemperatureSeries& series, const SeasonalProfile& profile,
                                  std::span<const double> remainder) {
  if (remainder.size() != series.size()) throw ValidationError("remainder length does not match series");
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) out[i] = profile.at(series.records()[i].date) + remainder[i];
  return out;
}

// ---------------------------------------------------------------------------

void ArmaModel::validate() const {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw ValidationError("ARMA innovation variance must be positive");
  if (ar.size() > 6 || ma.size() > 6 || d < 0 || d > 4) throw ValidationError("ARMA order outside p,q <= 6, d <= 4");
  for (double c : ar)
    if (!std::isfinite(c)) throw ValidationError("non-finite AR coefficient");
  for (double c : ma)
    if (!std::isfinite(c)) throw ValidationError("non-finite MA coefficient");
  if (!is_stationary(ar)) throw ValidationError("AR polynomial has a root on or inside the unit circle");
  if (!is_invertible(ma)) throw ValidationError("MA polynomial has a root on or inside the unit circle");
}

ArmaModel ArmaModel::okanagan_arma31() { return ArmaModel{{1.83, -0.96, 0.12}, {-0.96}, 0, 5.253}; }

double max_inverse_root(std::span<const double> c) {
  const auto n = static_cast<Eigen::Index>(c.size());
  if (n == 0) return 0.0;
  if (n == 1) return std::abs(c[0]);
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) companion(0, i) = c[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_stationary(std::span<const double> ar) { return max_inverse_root(ar) < 1.0; }

bool is_invertible(std::span<const double> ma) {
  std::vector<double> neg(ma.size());
  for (std::size_t i = 0; i < ma.size(); ++i) neg[i] = -ma[i];
  return max_inverse_root(neg) < 1.0;
}

namespace {

// Bound kept away from the unit circle so CSS recursions stay stable.
constexpr double kRootBound = 0.9995;

bool admissible(std::span<const double> ar, std::span<const double> ma) {
  std::vector<double> neg(ma.size());
  for (std::size_t i = 0; i < ma.size(); ++i) neg[i] = -ma[i];
  return max_inverse_root(ar) < kRootBound && max_inverse_root(neg) < kRootBound;
}

std::vector<double> difference(std::span<const double> x, int d) {
  std::vector<double> w(x.begin(), x.end());
  for (int k = 0; k < d; ++k) {
    if (w.empty()) break;
    for (std::size_t i = w.size() - 1; i > 0; --i) w[i] -= w[i - 1];
    w.erase(w.begin());
  }
  return w;
}

// Residuals e_t for t >= start (earlier entries are zero).
double css_residuals(std::span<const double> w, std::span<const double> ar, std::span<const double> ma,
                     std::size_t start, std::vector<double>& e) {
  e.assign(w.size(), 0.0);
  double sse = 0.0;
  const std::size_t p = ar.size(), q = ma.size();
  for (std::size_t t = start; t < w.size(); ++t) {
    double v = w[t];
    for (std::size_t i = 0; i < p; ++i) v -= ar[i] * w[t - 1 - i];
    for (std::size_t j = 0; j < q && j < t; ++j) v -= ma[j] * e[t - 1 - j];
    e[t] = v;
    sse += v * v;
  }
  return sse;
}

// Ordinary least squares returning coefficients; empty when singular.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return X.colPivHouseholderQr().solve(y);
}

// Hannan-Rissanen starting values, shrunk into the admissible region.
void initial_values(std::span<const double> w, int p, int q, std::size_t start, std::vector<double>& ar,
                    std::vector<double>& ma) {
  ar.assign(static_cast<std::size_t>(p), 0.0);
  ma.assign(static_cast<std::size_t>(q), 0.0);
  if (p == 0 && q == 0) return;
  const std::size_t n = w.size();
  std::vector<double> ehat(n, 0.0);
  std::size_t first = start;
  if (q > 0) {
    const std::size_t m = std::min<std::size_t>(std::max<std::size_t>(static_cast<std::size_t>(p + q) + 5, 20),
                                                n / 10);
    if (m >= 1 && n > 2 * m + 10) {
      const auto rows = static_cast<Eigen::Index>(n - m);
      Eigen::MatrixXd X(rows, static_cast<Eigen::Index>(m));
      Eigen::VectorXd y(rows);
      for (std::size_t t = m; t < n; ++t) {
        y[static_cast<Eigen::Index>(t - m)] = w[t];
        for (std::size_t i = 0; i < m; ++i) X(static_cast<Eigen::Index>(t - m), static_cast<Eigen::Index>(i)) = w[t - 1 - i];
      }
      const Eigen::VectorXd phi = least_squares(X, y);
      const Eigen::VectorXd fitted = X * phi;
      for (std::size_t t = m; t < n; ++t) ehat[t] = w[t] - fitted[static_cast<Eigen::Index>(t - m)];
      first = std::max(first, m + static_cast<std::size_t>(q));
    }
  }
  first = std::max(first, static_cast<std::size_t>(p));
  if (n <= first + static_cast<std::size_t>(p + q) + 10) return;
  const auto rows = static_cast<Eigen::Index>(n - first);
  Eigen::MatrixXd X(rows, p + q);
  Eigen::VectorXd y(rows);
  for (std::size_t t = first; t < n; ++t) {
    const auto r = static_cast<Eigen::Index>(t - first);
    y[r] = w[t];
    for (int i = 0; i < p; ++i) X(r, i) = w[t - 1 - static_cast<std::size_t>(i)];
    for (int j = 0; j < q; ++j) X(r, p + j) = ehat[t - 1 - static_cast<std::size_t>(j)];
  }
  const Eigen::VectorXd beta = least_squares(X, y);
  if (!beta.allFinite()) return;
  for (int i = 0; i < p; ++i) ar[static_cast<std::size_t>(i)] = beta[i];
  for (int j = 0; j < q; ++j) ma[static_cast<std::size_t>(j)] = beta[p + j];
  for (int k = 0; k < 200 && !admissible(ar, ma); ++k) {
    double c = 0.95;
    for (auto& a : ar) {
      a *= c;
      c *= 0.95;
    }
    c = 0.95;
    for (auto& m : ma) {
      m *= c;
      c *= 0.95;
    }
  }
  if (!admissible(ar, ma)) {
    std::fill(ar.begin(), ar.end(), 0.0);
    std::fill(ma.begin(), ma.end(), 0.0);
  }
}

struct CssResult {
  std::vector<double> ar, ma;
  double sse = 0.0;
  bool valid = false;
};

// Levenberg-Marquardt on the conditional sum of squares.
CssResult css_fit(std::span<const double> w, int p, int q, std::size_t start) {
  CssResult res;
  initial_values(w, p, q, start, res.ar, res.ma);
  std::vector<double> e;
  res.sse = css_residuals(w, res.ar, res.ma, start, e);
  res.valid = admissible(res.ar, res.ma) && std::isfinite(res.sse);
  const int k = p + q;
  if (k == 0 || !res.valid) return res;

  const std::size_t n = w.size();
  std::vector<std::vector<double>> de(static_cast<std::size_t>(k), std::vector<double>(n, 0.0));
  double lambda = 1e-3;
  for (int iter = 0; iter < 100; ++iter) {
    // Residual derivatives by recursion.
    for (auto& v : de) std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t t = start; t < n; ++t) {
      for (int i = 0; i < p; ++i) {
        double v = -w[t - 1 - static_cast<std::size_t>(i)];
        for (int j = 0; j < q && static_cast<std::size_t>(j) < t; ++j)
          v -= res.ma[static_cast<std::size_t>(j)] * de[static_cast<std::size_t>(i)][t - 1 - static_cast<std::size_t>(j)];
        de[static_cast<std::size_t>(i)][t] = v;
      }
      for (int m = 0; m < q; ++m) {
        double v = static_cast<std::size_t>(m) < t ? -e[t - 1 - static_cast<std::size_t>(m)] : 0.0;
        for (int j = 0; j < q && static_cast<std::size_t>(j) < t; ++j)
          v -= res.ma[static_cast<std::size_t>(j)] * de[static_cast<std::size_t>(p + m)][t - 1 - static_cast<std::size_t>(j)];
        de[static_cast<std::size_t>(p + m)][t] = v;
      }
    }
    Eigen::MatrixXd JtJ = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd Jte = Eigen::VectorXd::Zero(k);
    for (std::size_t t = start; t < n; ++t) {
      for (int a = 0; a < k; ++a) {
        const double da = de[static_cast<std::size_t>(a)][t];
        Jte[a] += da * e[t];
        for (int b = a; b < k; ++b) JtJ(a, b) += da * de[static_cast<std::size_t>(b)][t];
      }
    }
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < a; ++b) JtJ(a, b) = JtJ(b, a);

    bool improved = false;
    for (int attempt = 0; attempt < 20; ++attempt) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = A.ldlt().solve(-Jte);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      std::vector<double> ar = res.ar, ma = res.ma;
      for (int i = 0; i < p; ++i) ar[static_cast<std::size_t>(i)] += step[i];
      for (int j = 0; j < q; ++j) ma[static_cast<std::size_t>(j)] += step[p + j];
      std::vector<double> e2;
      if (admissible(ar, ma)) {
        const double sse = css_residuals(w, ar, ma, start, e2);
        if (std::isfinite(sse) && sse < res.sse) {
          const double rel = (res.sse - sse) / res.sse;
          res.ar = std::move(ar);
          res.ma = std::move(ma);
          res.sse = sse;
          e = std::move(e2);
          lambda = std::max(lambda / 10.0, 1e-12);
          improved = true;
          if (rel < 1e-12) return res;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  return res;
}

ArmaFit finish_fit(const CssResult& r, int d, std::size_t n_eff) {
  ArmaFit f;
  f.model.ar = r.ar;
  f.model.ma = r.ma;
  f.model.d = d;
  f.n_effective = static_cast<int>(n_eff);
  f.css = r.sse;
  f.model.sigma2 = r.sse / static_cast<double>(n_eff);
  const double n = static_cast<double>(n_eff);
  f.loglik = -0.5 * n * (std::log(2.0 * std::numbers::pi * f.model.sigma2) + 1.0);
  const double k = static_cast<double>(r.ar.size() + r.ma.size() + 1);
  f.bic = -2.0 * f.loglik + k * std::log(n);
  return f;
}

ArmaFit fit_with_window(std::span<const double> x, ArmaOrder order, std::size_t conditioning) {
  if (order.p < 0 || order.q < 0 || order.d < 0 || order.p > 6 || order.q > 6 || order.d > 4)
    throw ValidationError("ARMA order outside p,q <= 6, d <= 4");
  const auto w = difference(x, order.d);
  const std::size_t start = conditioning - static_cast<std::size_t>(order.d);
  const std::size_t n_eff = x.size() - conditioning;
  const CssResult r = css_fit(w, order.p, order.q, start);
  if (!r.valid || !(r.sse > 0.0))
    throw ComputationError("ARMA(" + std::to_string(order.p) + "," + std::to_string(order.d) + "," +
                           std::to_string(order.q) + ") fit is not stationary and invertible");
  return finish_fit(r, order.d, n_eff);
}

void check_length(std::span<const double> x) {
  if (x.size() < 200) throw ValidationError("ARMA fitting needs at least 200 values");
  for (double v : x)
    if (!std::isfinite(v)) throw ValidationError("non-finite value in remainder series");
}

}  // namespace

ArmaFit fit_arma(std::span<const double> remainder, ArmaOrder order) {
  check_length(remainder);
  return fit_with_window(remainder, order, static_cast<std::size_t>(order.d + order.p));
}

ArmaFit select_arma(std::span<const double> remainder, const OrderSearch& search) {
  check_length(remainder);
  if (search.max_p < 0 || search.max_q < 0 || search.max_d < 0 || search.max_p > 6 || search.max_q > 6 ||
      search.max_d > 4)
    throw ValidationError("order search bounds outside p,q <= 6, d <= 4");
  const auto conditioning = static_cast<std::size_t>(search.max_d + search.max_p);
  std::optional<ArmaFit> best;
  std::vector<OrderScore> scores;
  for (int d = 0; d <= search.max_d; ++d)
    for (int p = 0; p <= search.max_p; ++p)
      for (int q = 0; q <= search.max_q; ++q) {
        OrderScore s{{p, d, q}};
        try {
          ArmaFit f = fit_with_window(remainder, {p, d, q}, conditioning);
          s.bic = f.bic;
          s.sigma2 = f.model.sigma2;
          s.valid = true;
          if (!best || f.bic < best->bic) best = std::move(f);
        } catch (const ComputationError&) {
        }
        scores.push_back(s);
      }
  if (!best) throw ComputationError("no stationary and invertible ARIMA fit at any order");
  best->candidates = std::move(scores);
  return *best;
}

std::vector<double> one_step_residuals(const ArmaModel& model, std::span<const double> series) {
  model.validate();
  const auto w = difference(series, model.d);
  const std::size_t p = model.ar.size();
  if (w.size() <= p) return {};
  std::vector<double> e;
  css_residuals(w, model.ar, model.ma, p, e);
  return {e.begin() + static_cast<std::ptrdiff_t>(p), e.end()};
}

ArmaPathGenerator::ArmaPathGenerator(const ArmaModel& model, std::span<const double> history, double variance_scale)
    : model_(model) {
  model.validate();
  if (!(variance_scale > 0.0) || !std::isfinite(variance_scale))
    throw ValidationError("variance_scale must be positive");
  const std::size_t p = model.ar.size(), q = model.ma.size(), d = static_cast<std::size_t>(model.d);
  if (history.size() < std::max(p + d, q))
    throw ValidationError("history has " + std::to_string(history.size()) + " values; the model needs " +
                          std::to_string(std::max(p + d, q)));
  sd_ = std::sqrt(variance_scale * model.sigma2);

  // Innovations implied by the history.
  const auto w_hist = difference(history, model.d);
  std::vector<double> e_hist;
  if (!w_hist.empty()) css_residuals(w_hist, model.ar, model.ma, std::min(p, w_hist.size()), e_hist);
  w0_.assign(w_hist.end() - static_cast<std::ptrdiff_t>(std::min(p, w_hist.size())), w_hist.end());
  e0_.assign(e_hist.end() - static_cast<std::ptrdiff_t>(std::min(q, e_hist.size())), e_hist.end());
  x0_.assign(history.end() - static_cast<std::ptrdiff_t>(d), history.end());

  // Undifferencing: x_t = w_t + sum_j c_j x_{t-j}.
  undiff_.assign(d, 0.0);
  for (std::size_t j = 1; j <= d; ++j) {
    double binom = 1.0;
    for (std::size_t k = 1; k <= j; ++k) binom = binom * static_cast<double>(d - k + 1) / static_cast<double>(k);
    undiff_[j - 1] = (j % 2 == 1 ? 1.0 : -1.0) * binom;
  }
}

void ArmaPathGenerator::start(std::uint64_t master_seed, std::size_t path_index) {
  rng_ = make_rng(master_seed, {stream::paths, path_index});
  noise_ = std::normal_distribution<double>(0.0, sd_);
  w_ = w0_;
  e_ = e0_;
  x_ = x0_;
}

double ArmaPathGenerator::next() {
  const std::size_t p = model_.ar.size(), q = model_.ma.size(), d = undiff_.size();
  const double z = noise_(rng_);
  double wt = z;
  for (std::size_t i = 0; i < p && i < w_.size(); ++i) wt += model_.ar[i] * w_[w_.size() - 1 - i];
  for (std::size_t j = 0; j < q && j < e_.size(); ++j) wt += model_.ma[j] * e_[e_.size() - 1 - j];
  double xt = wt;
  for (std::size_t j = 0; j < d; ++j) xt += undiff_[j] * x_[x_.size() - 1 - j];
  w_.push_back(wt);
  e_.push_back(z);
  x_.push_back(xt);
  return xt;
}

std::vector<std::vector<double>> simulate_remainder_paths(const ArmaModel& model, std::span<const double> history,
                                                          const PathRequest& request) {
  if (request.horizon < 1) throw ValidationError("horizon must be at least 1 day");
  if (request.n_paths < 1) throw ValidationError("need at least one path");
  ArmaPathGenerator gen(model, history, request.variance_scale);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(request.n_paths));
  for (std::size_t path = 0; path < out.size(); ++path) {
    gen.start(request.seed, request.first_path + path);
    auto& x = out[path];
    x.resize(static_cast<std::size_t>(request.horizon));
    for (auto& v : x) v = gen.next();
  }
  return out;
}

std::vector<std::vector<double>> simulate_paths(const ArmaModel& model, const SeasonalProfile& profile,
                                                std::span<const double> history, const PathRequest& request) {
  auto paths = simulate_remainder_paths(model, history, request);
  for (auto& path : paths)
    for (std::size_t t = 0; t < path.size(); ++t) path[t] += profile.at(add_days(request.start, static_cast<long long>(t)));
  return paths;
}

std::vector<double> simulate_stationary(const ArmaModel& model, std::size_t n, std::uint64_t seed,
                                        double variance_scale, std::size_t burn_in) {
  if (model.d != 0) throw ValidationError("stationary simulation requires d = 0");
  if (n == 0) return {};
  const std::size_t need = std::max(model.ar.size(), model.ma.size());
  const std::vector<double> zeros(need, 0.0);
  PathRequest req;
  req.horizon = static_cast<int>(n + burn_in);
  req.n_paths = 1;
  req.seed = seed;
  req.variance_scale = variance_scale;
  auto path = simulate_remainder_paths(model, zeros, req).front();
  return {path.begin() + static_cast<std::ptrdiff_t>(burn_in), path.end()};
}

// ---------------------------------------------------------------------------

SeriesSummary summarize_series(std::span<const double> x) {
  SeriesSummary s;
  s.n = x.size();
  if (x.empty()) return s;
  s.mean = stats::mean(x);
  s.variance = x.size() > 1 ? stats::sample_variance(x) : 0.0;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

std::vector<double> sample_acf(std::span<const double> x, int max_lag) {
  if (max_lag < 0) throw ValidationError("max_lag must be non-negative");
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("ACF needs at least two values");
  const double m = stats::mean(x);
  std::vector<double> acf(static_cast<std::size_t>(max_lag) + 1, 0.0);
  double c0 = 0.0;
  for (double v : x) c0 += (v - m) * (v - m);
  acf[0] = 1.0;
  if (c0 == 0.0) return acf;
  for (int k = 1; k <= max_lag && static_cast<std::size_t>(k) < n; ++k) {
    double c = 0.0;
    for (std::size_t t = 0; t + static_cast<std::size_t>(k) < n; ++t) c += (x[t] - m) * (x[t + static_cast<std::size_t>(k)] - m);
    acf[static_cast<std::size_t>(k)] = c / c0;
  }
  return acf;
}

std::vector<double> sample_pacf(std::span<const double> x, int max_lag) {
  const auto r = sample_acf(x, max_lag);
  std::vector<double> pacf(r.size(), 0.0);
  pacf[0] = 1.0;
  std::vector<double> phi, prev;
  double v = 1.0;
  for (std::size_t k = 1; k < r.size(); ++k) {
    double num = r[k];
    for (std::size_t j = 1; j < k; ++j) num -= prev[j - 1] * r[k - j];
    const double kappa = v > 0.0 ? num / v : 0.0;
    phi.assign(k, 0.0);
    for (std::size_t j = 1; j < k; ++j) phi[j - 1] = prev[j - 1] - kappa * prev[k - j - 1];
    phi[k - 1] = kappa;
    v *= 1.0 - kappa * kappa;
    pacf[k] = kappa;
    prev = phi;
  }
  return pacf;
}

Diagnostics diagnostics(std::span<const double> observed, std::span<const double> simulated, int max_lag) {
  if (observed.size() < 50 || simulated.size() < 50)
    throw ValidationError("diagnostics need at least 50 values in each series");
  Diagnostics d;
  d.max_lag = max_lag;
  d.acf_observed = sample_acf(observed, max_lag);
  d.pacf_observed = sample_pacf(observed, max_lag);
  d.acf_simulated = sample_acf(simulated, max_lag);
  d.pacf_simulated = sample_pacf(simulated, max_lag);
  d.observed = summarize_series(observed);
  d.simulated = summarize_series(simulated);
  return d;
}

}  // namespace phenocast
