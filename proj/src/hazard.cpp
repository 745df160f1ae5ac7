#include "phenocast/hazard.hpp"

#include <cmath>

#include "phenocast/error.hpp"

namespace phenocast {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::agdd: return "agdd";
    case Family::exp_smooth: return "expsmooth";
    case Family::gdd: return "gdd";
    case Family::five_days: return "5days";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (Family f : all_families)
    if (to_string(f) == name) return f;
  if (name == "fivedays" || name == "five_days") return Family::five_days;
  if (name == "exp_smooth") return Family::exp_smooth;
  throw ValidationError("unknown model family '" + std::string(name) + "' (expected agdd|expsmooth|gdd|5days)");
}

int covariate_width(Family family) { return family == Family::five_days ? 5 : 1; }

int HazardModelSpec::parameter_count() const {
  switch (family) {
    case Family::agdd:
    case Family::gdd: return 3;
    case Family::exp_smooth: return 4;
    case Family::five_days: return 7;
  }
  return 0;
}

void ParamVector::validate(Family family) const {
  const auto width = static_cast<std::size_t>(covariate_width(family));
  if (b.size() != width)
    throw ValidationError("parameter dimension mismatch: " + std::string(to_string(family)) + " needs " +
                          std::to_string(width) + " slope(s), got " + std::to_string(b.size()));
  if (family == Family::exp_smooth && !gamma) throw ValidationError("expsmooth parameters need gamma");
  if (family != Family::exp_smooth && gamma)
    throw ValidationError("gamma is only defined for expsmooth");
  if (gamma && !(*gamma >= 0.0 && *gamma <= 1.0)) throw ValidationError("gamma must lie in [0, 1]");
  for (double v : flatten())
    if (!std::isfinite(v)) throw ValidationError("non-finite parameter");
}

std::vector<double> ParamVector::flatten() const {
  std::vector<double> out{a};
  out.insert(out.end(), b.begin(), b.end());
  if (gamma) out.push_back(*gamma);
  out.push_back(t_base);
  return out;
}

ParamVector ParamVector::unflatten(Family family, std::span<const double> v) {
  const HazardModelSpec spec{family};
  if (v.size() != static_cast<std::size_t>(spec.parameter_count()))
    throw ValidationError("parameter dimension mismatch: " + std::string(to_string(family)) + " needs " +
                          std::to_string(spec.parameter_count()) + " values");
  const auto width = static_cast<std::size_t>(covariate_width(family));
  ParamVector p;
  p.a = v[0];
  p.b.assign(v.begin() + 1, v.begin() + 1 + static_cast<std::ptrdiff_t>(width));
  if (family == Family::exp_smooth) p.gamma = v[1 + width];
  p.t_base = v.back();
  return p;
}

std::vector<std::string> ParamVector::names(Family family) {
  switch (family) {
    case Family::agdd:
    case Family::gdd: return {"a", "b", "t_base"};
    case Family::exp_smooth: return {"a", "b", "gamma", "t_base"};
    case Family::five_days: return {"a", "b1", "b2", "b3", "b4", "b5", "t_base"};
  }
  return {};
}

// ---------------------------------------------------------------------------

CovariateAccumulator::CovariateAccumulator(Family family, double t_base, double gamma)
    : family_(family), t_base_(t_base), decay_(1.0 - gamma), width_(covariate_width(family)) {
  if (!std::isfinite(t_base) || !std::isfinite(gamma)) throw ValidationError("covariate: non-finite parameter");
  if (family == Family::exp_smooth && !(gamma >= 0.0 && gamma <= 1.0))
    throw ValidationError("gamma must lie in [0, 1]");
}

void CovariateAccumulator::push(double tavg) {
  const double g = tavg > t_base_ ? tavg - t_base_ : 0.0;
  switch (family_) {
    case Family::agdd: value_[0] += g; break;
    case Family::exp_smooth: value_[0] = g + decay_ * value_[0]; break;
    case Family::gdd: value_[0] = g; break;
    case Family::five_days:
      for (int k = 4; k > 0; --k) value_[static_cast<std::size_t>(k)] = value_[static_cast<std::size_t>(k - 1)];
      value_[0] = g;
      break;
  }
  ++days_;
}

double CovariateAccumulator::linear_predictor(const ParamVector& params) const {
  double eta = params.a;
  for (int k = 0; k < width_; ++k) eta += params.b[static_cast<std::size_t>(k)] * value_[static_cast<std::size_t>(k)];
  return eta;
}

std::vector<double> covariate(Family family, const YearPanel& panel, const ParamVector& params, int t) {
  if (t < 1 || t > panel.length())
    throw ValidationError("day " + std::to_string(t) + " outside panel 1.." + std::to_string(panel.length()));
  CovariateAccumulator acc(family, params.t_base, params.gamma.value_or(0.0));
  for (int s = 0; s < t; ++s) acc.push(panel.tavg()[static_cast<std::size_t>(s)]);
  const auto v = acc.value();
  return {v.begin(), v.end()};
}

CovariatePath covariate_path(Family family, std::span<const double> tavg, double t_base, double gamma,
                             std::size_t n_days) {
  if (n_days > tavg.size()) throw ValidationError("covariate path longer than temperature path");
  CovariateAccumulator acc(family, t_base, gamma);
  CovariatePath out;
  out.width = acc.width();
  out.values.reserve(n_days * static_cast<std::size_t>(out.width));
  for (std::size_t t = 0; t < n_days; ++t) {
    acc.push(tavg[t]);
    const auto v = acc.value();
    out.values.insert(out.values.end(), v.begin(), v.end());
  }
  return out;
}

// ---------------------------------------------------------------------------

double logistic(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

HazardPath hazard_path(const HazardModelSpec& spec, std::span<const double> tavg, const ParamVector& params) {
  params.validate(spec.family);
  CovariateAccumulator acc(spec.family, params.t_base, params.gamma.value_or(0.0));
  HazardPath out;
  out.probability.reserve(tavg.size());
  for (double t : tavg) {
    if (!std::isfinite(t)) throw ValidationError("non-finite temperature");
    acc.push(t);
    out.probability.push_back(logistic(acc.linear_predictor(params)));
  }
  return out;
}

HazardPath hazard_path(const HazardModelSpec& spec, const YearPanel& panel, const ParamVector& params) {
  return hazard_path(spec, panel.tavg(), params);
}

EventMass event_mass(const HazardPath& path) {
  EventMass out;
  out.mass.reserve(path.probability.size());
  double survival = 1.0;
  for (double p : path.probability) {
    out.mass.push_back(survival * p);
    survival *= 1.0 - p;
  }
  out.tail = survival;
  return out;
}

double log_likelihood(const HazardModelSpec& spec, std::span<const YearPanel> panels, const ParamVector& params) {
  if (panels.empty()) throw ValidationError("log_likelihood: no year panels");
  params.validate(spec.family);
  double total = 0.0;
  for (const auto& panel : panels) {
    CovariateAccumulator acc(spec.family, params.t_base, params.gamma.value_or(0.0));
    const int last = panel.exposure_days();
    double year_ll = 0.0;
    for (int t = 1; t <= last; ++t) {
      acc.push(panel.tavg()[static_cast<std::size_t>(t - 1)]);
      const double eta = acc.linear_predictor(params);
      const bool event = !panel.censored() && t == last;
      // log P = -softplus(-eta), log(1 - P) = -softplus(eta)
      year_ll -= event ? softplus(-eta) : softplus(eta);
    }
    total += year_ll;
  }
  return total;
}

}  // namespace phenocast
