#include "phenocast/estimate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "phenocast/error.hpp"
#include "phenocast/parallel.hpp"
#include "phenocast/random.hpp"
#include "phenocast/stats.hpp"

namespace phenocast {

std::vector<double> GridRange::points() const {
  if (!(step > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
    throw ValidationError("invalid grid " + to_string());
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + static_cast<double>(i) * step;
  return out;
}

GridRange GridRange::parse(std::string_view text) {
  GridRange g;
  double* fields[] = {&g.lo, &g.hi, &g.step};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t colon = i < 2 ? text.find(':', pos) : text.size();
    if (colon == std::string_view::npos) throw ValidationError("grid must be lo:hi:step, got '" + std::string(text) + "'");
    const std::string_view part = text.substr(pos, colon - pos);
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), *fields[i]);
    if (ec != std::errc{} || ptr != part.data() + part.size() || part.empty())
      throw ValidationError("grid must be lo:hi:step, got '" + std::string(text) + "'");
    pos = colon + 1;
  }
  (void)g.points();
  return g;
}

std::string GridRange::to_string() const {
  std::ostringstream ss;
  ss.precision(17);
  ss << lo << ':' << hi << ':' << step;
  return ss.str();
}

double bic_value(int parameter_count, int n_years, double loglik) {
  return static_cast<double>(parameter_count) * std::log(static_cast<double>(n_years)) - 2.0 * loglik;
}

// ---------------------------------------------------------------------------

namespace detail {

namespace {

// Fills `d` for (t_base, gamma), merging consecutive non-event days of a year
// that share the same covariates into one weighted row. Storage is reused.
void fill_design(Design& d, Family family, std::span<const YearPanel> panels, double t_base, double gamma) {
  d.width = covariate_width(family);
  const auto width = static_cast<std::size_t>(d.width);
  d.x.clear();
  d.y.clear();
  d.w.clear();
  for (const auto& p : panels) {
    CovariateAccumulator acc(family, t_base, gamma);
    const int last = p.exposure_days();
    const auto tavg = p.tavg();
    bool open = false;  // last row belongs to this year and is a non-event row
    for (int t = 1; t <= last; ++t) {
      acc.push(tavg[static_cast<std::size_t>(t - 1)]);
      const auto v = acc.value();
      const std::uint8_t event = !p.censored() && t == last ? 1 : 0;
      if (open && !event && std::equal(v.begin(), v.end(), d.x.end() - static_cast<std::ptrdiff_t>(width))) {
        d.w.back() += 1.0;
        continue;
      }
      d.x.insert(d.x.end(), v.begin(), v.end());
      d.y.push_back(event);
      d.w.push_back(1.0);
      open = !event;
    }
  }
}

}  // namespace

Design build_design(Family family, std::span<const YearPanel> panels, double t_base, double gamma) {
  Design d;
  fill_design(d, family, panels, t_base, gamma);
  return d;
}

namespace {

void rebuild_design(Design& d, Family family, std::span<const YearPanel> panels, double t_base, double gamma) {
  fill_design(d, family, panels, t_base, gamma);
}

inline void logit_terms(double eta, double& log_term, double& p) {
  // log_term = log(1 + e^eta); p = logistic(eta)
  const double e = std::exp(-std::abs(eta));
  log_term = std::max(eta, 0.0) + std::log1p(e);
  p = eta >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
}

}  // namespace

DesignEval evaluate_design(const Design& design, std::span<const double> coef) {
  const auto width = static_cast<std::size_t>(design.width);
  const std::size_t dim = width + 1;
  if (coef.size() != dim) throw ValidationError("coefficient dimension mismatch");
  DesignEval ev;
  ev.gradient.assign(dim, 0.0);
  ev.information.assign(dim * dim, 0.0);
  const std::size_t n = design.rows();

  if (width == 1) {
    const double a = coef[0], b = coef[1];
    double ll = 0, g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
    const double* x = design.x.data();
    const std::uint8_t* y = design.y.data();
    const double* wt = design.w.data();
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = x[i];
      const double eta = a + b * xi;
      double lt, p;
      logit_terms(eta, lt, p);
      const double yi = y[i];
      const double c = wt[i];
      ll += c * (yi * eta - lt);
      const double r = c * (yi - p);
      const double w = c * p * (1.0 - p);
      g0 += r;
      g1 += r * xi;
      h00 += w;
      h01 += w * xi;
      h11 += w * xi * xi;
    }
    ev.loglik = ll;
    ev.gradient = {g0, g1};
    ev.information = {h00, h01, h01, h11};
    return ev;
  }

  std::vector<double> row(dim);
  row[0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = design.x.data() + i * width;
    double eta = coef[0];
    for (std::size_t k = 0; k < width; ++k) {
      row[k + 1] = xi[k];
      eta += coef[k + 1] * xi[k];
    }
    double lt, p;
    logit_terms(eta, lt, p);
    const double yi = design.y[i];
    const double c = design.w[i];
    ev.loglik += c * (yi * eta - lt);
    const double r = c * (yi - p);
    const double w = c * p * (1.0 - p);
    for (std::size_t j = 0; j < dim; ++j) {
      ev.gradient[j] += r * row[j];
      const double wj = w * row[j];
      for (std::size_t k = j; k < dim; ++k) ev.information[j * dim + k] += wj * row[k];
    }
  }
  for (std::size_t j = 0; j < dim; ++j)
    for (std::size_t k = 0; k < j; ++k) ev.information[j * dim + k] = ev.information[k * dim + j];
  return ev;
}

InnerFit maximize_coefficients(const Design& design, std::span<const double> start, int max_iterations,
                               double tolerance) {
  const auto width = static_cast<std::size_t>(design.width);
  const std::size_t dim = width + 1;
  if (start.size() != dim) throw ValidationError("coefficient dimension mismatch");

  // Identically-zero covariate columns carry no information; hold them at 0.
  std::vector<std::size_t> active{0};
  for (std::size_t k = 0; k < width; ++k) {
    bool nonzero = false;
    for (std::size_t i = 0; i < design.rows() && !nonzero; ++i) nonzero = design.x[i * width + k] != 0.0;
    if (nonzero) active.push_back(k + 1);
  }
  const auto m = static_cast<Eigen::Index>(active.size());

  InnerFit out;
  out.coef.assign(start.begin(), start.end());
  for (std::size_t k = 1; k < dim; ++k)
    if (std::find(active.begin(), active.end(), k) == active.end()) out.coef[k] = 0.0;

  DesignEval ev = evaluate_design(design, out.coef);
  Eigen::VectorXd g(m), delta(m);
  Eigen::MatrixXd info(m, m);
  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it;
    if (!std::isfinite(ev.loglik)) break;
    double gmax = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      g[j] = ev.gradient[active[static_cast<std::size_t>(j)]];
      gmax = std::max(gmax, std::abs(g[j]));
      for (Eigen::Index k = 0; k < m; ++k)
        info(j, k) = ev.information[active[static_cast<std::size_t>(j)] * dim + active[static_cast<std::size_t>(k)]];
    }
    if (gmax <= tolerance) {
      out.converged = true;
      break;
    }
    // Newton direction; a small ridge keeps near-singular systems solvable.
    double ridge = 0.0;
    const double scale = std::max(1e-300, info.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd reg = info;
      if (ridge > 0.0) reg.diagonal().array() += ridge;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0.0).all()) {
        delta = ldlt.solve(g);
        if (delta.allFinite()) break;
      }
      ridge = ridge == 0.0 ? 1e-12 * scale : ridge * 10.0;
    }
    const double decrement = g.dot(delta);
    if (!(decrement >= 0.0) || !delta.allFinite()) break;
    if (std::sqrt(decrement) <= tolerance) {
      out.converged = true;
      break;
    }
    // Predicted gain at rounding level of the log-likelihood: take the step
    // if it helps and stop.
    const bool at_rounding = decrement <= 1e-12 * (1.0 + std::abs(ev.loglik));
    double step = 1.0;
    bool accepted = false;
    std::vector<double> trial = out.coef;
    for (int h = 0; h < 60; ++h, step *= 0.5) {
      for (Eigen::Index j = 0; j < m; ++j)
        trial[active[static_cast<std::size_t>(j)]] = out.coef[active[static_cast<std::size_t>(j)]] + step * delta[j];
      DesignEval cand = evaluate_design(design, trial);
      if (std::isfinite(cand.loglik) && cand.loglik >= ev.loglik) {
        out.coef = trial;
        ev = std::move(cand);
        accepted = true;
        break;
      }
      // A full step that fails only by rounding means the optimum is reached.
      if (h == 0 && decrement <= 1e-8 * (1.0 + std::abs(ev.loglik))) break;
    }
    if (!accepted) {
      // No ascent possible along the Newton direction: at numerical optimum
      // when the predicted gain is small.
      out.converged = decrement <= 1e-8 * (1.0 + std::abs(ev.loglik));
      break;
    }
    out.iterations = it + 1;
    if (at_rounding) {
      out.converged = true;
      break;
    }
  }
  out.loglik = ev.loglik;
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------

namespace {

using detail::Design;
using detail::InnerFit;

class ProfileSearch {
 public:
  ProfileSearch(Family family, std::span<const YearPanel> panels, const SearchConfig& config)
      : family_(family), panels_(panels), config_(config) {
    design_ = detail::build_design(family, panels, 0.0, 0.0);
    std::size_t events = 0;
    for (auto y : design_.y) events += y;
    events_ = events;
    double exposure = 0.0;
    for (double w : design_.w) exposure += w;
    const double rate = std::clamp(static_cast<double>(events) / std::max(1.0, exposure), 1e-6, 1.0 - 1e-6);
    default_start_.assign(static_cast<std::size_t>(design_.width) + 1, 0.0);
    default_start_[0] = std::log(rate / (1.0 - rate));
    warm_ = default_start_;
  }

  TracePoint probe(double t_base, double gamma) {
    detail::rebuild_design(design_, family_, panels_, t_base, gamma);
    InnerFit f = detail::maximize_coefficients(design_, warm_, config_.max_iterations, config_.gradient_tolerance);
    if (!f.converged && warm_ != default_start_) {
      InnerFit cold =
          detail::maximize_coefficients(design_, default_start_, config_.max_iterations, config_.gradient_tolerance);
      if (cold.converged || cold.loglik > f.loglik) f = std::move(cold);
    }
    TracePoint tp{t_base, gamma, f.loglik, f.converged, f.iterations};
    trace_.push_back(tp);
    if (!f.converged) ++nonconverged_;
    if (f.converged && std::isfinite(f.loglik)) {
      warm_ = f.coef;
      if (!best_ || f.loglik > best_->loglik) {
        best_ = tp;
        best_coef_ = f.coef;
      }
    }
    return tp;
  }

  // Golden-section maximization of the profile over one coordinate.
  void golden(double lo, double hi, double tol, bool over_gamma) {
    if (!(hi > lo) || !best_) return;
    const double fixed_tb = best_->t_base, fixed_g = best_->gamma;
    const std::vector<double> saved_warm = best_coef_;
    auto eval = [&](double v) {
      warm_ = saved_warm;
      const TracePoint tp = over_gamma ? probe(fixed_tb, v) : probe(v, fixed_g);
      return tp.converged ? tp.loglik : -std::numeric_limits<double>::infinity();
    };
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = eval(c), fd = eval(d);
    while (b - a > tol) {
      if (fc >= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - invphi * (b - a);
        fc = eval(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + invphi * (b - a);
        fd = eval(d);
      }
    }
  }

  const std::optional<TracePoint>& best() const { return best_; }
  const std::vector<double>& best_coef() const { return best_coef_; }
  std::vector<TracePoint> take_trace() { return std::move(trace_); }
  int nonconverged() const { return nonconverged_; }
  std::size_t events() const { return events_; }
  const Design& design() const { return design_; }
  void reset_warm() { warm_ = default_start_; }
  void set_warm(const std::vector<double>& c) { warm_ = c; }

 private:
  Family family_;
  std::span<const YearPanel> panels_;
  const SearchConfig& config_;
  Design design_;
  std::size_t events_ = 0;
  std::vector<double> default_start_, warm_, best_coef_;
  std::optional<TracePoint> best_;
  std::vector<TracePoint> trace_;
  int nonconverged_ = 0;
};

// Every stride-th index of a grid of size n, always including the last.
std::vector<std::size_t> stride_indices(std::size_t n, std::size_t stride) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; i += stride) out.push_back(i);
  if (!out.empty() && out.back() != n - 1) out.push_back(n - 1);
  return out;
}

bool degenerate_data(std::span<const YearPanel> panels) {
  const auto& first = panels.front();
  if (first.censored()) return false;
  const int day = first.exposure_days();
  for (const auto& p : panels) {
    if (p.censored() || p.exposure_days() != day) return false;
    if (!std::equal(p.tavg().begin(), p.tavg().begin() + day, first.tavg().begin())) return false;
  }
  return true;
}

bool weak_information(const Design& design, std::span<const double> coef) {
  const auto ev = detail::evaluate_design(design, coef);
  const auto dim = static_cast<Eigen::Index>(coef.size());
  Eigen::MatrixXd info(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index k = 0; k < dim; ++k) info(j, k) = ev.information[static_cast<std::size_t>(j * dim + k)];
  if (info(0, 0) < 1e-8) return true;
  Eigen::VectorXd d = info.diagonal();
  for (Eigen::Index j = 0; j < dim; ++j)
    if (!(d[j] > 0.0)) return true;
  Eigen::VectorXd s = d.array().sqrt().inverse();
  const Eigen::MatrixXd corr = s.asDiagonal() * info * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() < 1e-10;
}

}  // namespace

FittedModel fit(const HazardModelSpec& spec, std::span<const YearPanel> panels, const SearchConfig& search) {
  if (panels.empty()) throw ValidationError("fit: no year panels");
  if (search.max_iterations < 1) throw ValidationError("fit: max_iterations must be positive");
  const auto tgrid = search.t_base.points();

  ProfileSearch ps(spec.family, panels, search);
  if (spec.family == Family::exp_smooth) {
    const auto ggrid = search.gamma.points();
    const auto ts = static_cast<std::size_t>(std::max(1, search.joint_tbase_stride));
    const auto gs = static_cast<std::size_t>(std::max(1, search.joint_gamma_stride));
    for (std::size_t i : stride_indices(tgrid.size(), ts))
      for (std::size_t j : stride_indices(ggrid.size(), gs)) ps.probe(tgrid[i], ggrid[j]);
    if ((ts > 1 || gs > 1) && ps.best()) {
      // Full resolution around the best coarse cell.
      const double tb0 = ps.best()->t_base, g0 = ps.best()->gamma;
      const double tb_reach = static_cast<double>(ts) * search.t_base.step + 1e-9;
      const double g_reach = static_cast<double>(std::max<std::size_t>(gs, 2)) * search.gamma.step + 1e-12;
      for (double tb : tgrid) {
        if (std::abs(tb - tb0) > tb_reach) continue;
        for (double g : ggrid)
          if (std::abs(g - g0) <= g_reach) ps.probe(tb, g);
      }
    }
    if (search.refine && ps.best()) {
      const double g0 = ps.best()->gamma;
      ps.golden(std::max(search.gamma.lo, g0 - search.gamma.step), std::min(search.gamma.hi, g0 + search.gamma.step),
                1e-6, true);
      const double tb0 = ps.best()->t_base;
      ps.golden(std::max(search.t_base.lo, tb0 - search.t_base.step),
                std::min(search.t_base.hi, tb0 + search.t_base.step), 1e-4, false);
    }
  } else {
    const auto ts = static_cast<std::size_t>(std::max(1, search.tbase_stride));
    std::vector<std::optional<double>> value(tgrid.size());
    for (std::size_t i : stride_indices(tgrid.size(), ts)) {
      const auto tp = ps.probe(tgrid[i], 0.0);
      if (tp.converged) value[i] = tp.loglik;
    }
    if (ts > 1) {
      // Full resolution around the best coarse local maxima.
      const auto coarse = stride_indices(tgrid.size(), ts);
      std::vector<std::pair<double, std::size_t>> peaks;
      for (std::size_t k = 0; k < coarse.size(); ++k) {
        const auto& v = value[coarse[k]];
        if (!v) continue;
        const bool left_ok = k == 0 || !value[coarse[k - 1]] || *value[coarse[k - 1]] <= *v;
        const bool right_ok = k + 1 == coarse.size() || !value[coarse[k + 1]] || *value[coarse[k + 1]] <= *v;
        if (left_ok && right_ok) peaks.emplace_back(*v, coarse[k]);
      }
      std::stable_sort(peaks.begin(), peaks.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
      if (peaks.size() > static_cast<std::size_t>(std::max(1, search.refine_peaks)))
        peaks.resize(static_cast<std::size_t>(std::max(1, search.refine_peaks)));
      for (const auto& [v, c] : peaks) {
        ps.reset_warm();
        const std::size_t lo = c >= ts ? c - ts + 1 : 0;
        const std::size_t hi = std::min(tgrid.size() - 1, c + ts - 1);
        for (std::size_t i = lo; i <= hi; ++i)
          if (i % ts != 0 && i + 1 != tgrid.size()) ps.probe(tgrid[i], 0.0);
      }
    }
    if (search.refine && ps.best()) {
      const double tb0 = ps.best()->t_base;
      ps.golden(std::max(search.t_base.lo, tb0 - search.t_base.step),
                std::min(search.t_base.hi, tb0 + search.t_base.step), 1e-4, false);
    }
  }

  if (!ps.best()) {
    std::ostringstream msg;
    msg << "fit(" << to_string(spec.family) << "): inner optimizer failed at all " << ps.nonconverged()
        << " probed grid points";
    throw ComputationError(msg.str());
  }

  FittedModel out;
  out.spec = spec;
  const auto& best = *ps.best();
  const auto& coef = ps.best_coef();
  out.params.a = coef[0];
  out.params.b.assign(coef.begin() + 1, coef.end());
  if (spec.family == Family::exp_smooth) out.params.gamma = best.gamma;
  out.params.t_base = best.t_base;
  out.loglik = best.loglik;
  out.n_years = static_cast<int>(panels.size());
  out.bic = bic_value(spec.parameter_count(), out.n_years, out.loglik);
  out.nonconverged_points = ps.nonconverged();
  out.degenerate = degenerate_data(panels);

  const Design final_design = detail::build_design(spec.family, panels, best.t_base, best.gamma);
  bool zero_column = false;
  for (int k = 0; k < final_design.width; ++k) {
    bool nonzero = false;
    for (std::size_t i = 0; i < final_design.rows() && !nonzero; ++i)
      nonzero = final_design.x[i * static_cast<std::size_t>(final_design.width) + static_cast<std::size_t>(k)] != 0.0;
    zero_column = zero_column || !nonzero;
  }
  out.weakly_identified = ps.events() < 2 || zero_column || out.degenerate || weak_information(final_design, coef);
  out.trace = ps.take_trace();
  return out;
}

std::vector<RankedModel> bic_compare(std::span<const HazardModelSpec> specs, std::span<const YearPanel> panels,
                                     const SearchConfig& search, unsigned threads) {
  std::vector<RankedModel> results(specs.size());
  parallel_for(specs.size(), threads, [&](std::size_t i) {
    results[i].spec = specs[i];
    try {
      results[i].fitted = fit(specs[i], panels, search);
    } catch (const Error& e) {
      results[i].error = e.what();
    }
  });
  std::stable_sort(results.begin(), results.end(), [](const RankedModel& x, const RankedModel& y) {
    if (x.fitted.has_value() != y.fitted.has_value()) return x.fitted.has_value();
    if (!x.fitted) return false;
    if (x.fitted->bic != y.fitted->bic) return x.fitted->bic < y.fitted->bic;
    return x.spec.parameter_count() < y.spec.parameter_count();
  });
  return results;
}

std::vector<ParameterSummary> summarize_replicates(Family family, std::span<const ParamVector> replicates,
                                                   double alpha) {
  if (replicates.size() < 2) throw ValidationError("need at least two replicates to summarize");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  const auto names = ParamVector::names(family);
  std::vector<ParameterSummary> out;
  for (std::size_t j = 0; j < names.size(); ++j) {
    std::vector<double> v;
    v.reserve(replicates.size());
    for (const auto& r : replicates) v.push_back(r.flatten().at(j));
    std::sort(v.begin(), v.end());
    ParameterSummary s;
    s.name = names[j];
    s.mean = stats::mean(v);
    s.standard_error = std::sqrt(stats::sample_variance(v));
    s.ci_lower = stats::quantile_sorted(v, alpha / 2.0);
    s.ci_upper = stats::quantile_sorted(v, 1.0 - alpha / 2.0);
    s.min = v.front();
    s.max = v.back();
    out.push_back(s);
  }
  return out;
}

BootstrapSummary bootstrap(const HazardModelSpec& spec, std::span<const YearPanel> panels,
                           const BootstrapOptions& options) {
  if (options.replicates < 100) throw ValidationError("bootstrap needs at least 100 replicates");
  if (panels.empty()) throw ValidationError("bootstrap: no year panels");
  const auto B = static_cast<std::size_t>(options.replicates);
  std::vector<std::optional<ParamVector>> fits(B);
  parallel_for(B, options.threads, [&](std::size_t r) {
    Rng rng = make_rng(options.seed, {stream::bootstrap, r});
    std::uniform_int_distribution<std::size_t> pick(0, panels.size() - 1);
    std::vector<YearPanel> sample;
    sample.reserve(panels.size());
    for (std::size_t i = 0; i < panels.size(); ++i) sample.push_back(panels[pick(rng)]);
    try {
      auto f = fit(spec, sample, options.search);
      f.trace.clear();
      fits[r] = std::move(f.params);
    } catch (const ComputationError&) {
    }
  });

  BootstrapSummary out;
  out.spec = spec;
  out.requested = options.replicates;
  out.alpha = options.alpha;
  out.seed = options.seed;
  for (auto& f : fits) {
    if (f)
      out.replicates.push_back(std::move(*f));
    else
      ++out.failed;
  }
  if (static_cast<double>(out.failed) > 0.05 * static_cast<double>(B))
    throw ComputationError("bootstrap: " + std::to_string(out.failed) + " of " + std::to_string(B) +
                           " replicate fits failed (more than 5%)");
  out.parameters = summarize_replicates(spec.family, out.replicates, options.alpha);
  return out;
}

}  // namespace phenocast
