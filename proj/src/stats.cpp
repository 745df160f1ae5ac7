#include "phenocast/stats.hpp"

#include <algorithm>
#include <cmath>

#include "phenocast/error.hpp"

namespace phenocast::stats {

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mean(std::span<const double> values) {
  if (values.empty()) throw ValidationError("mean of an empty sample");
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw ValidationError("sample variance needs at least two values");
  const double m = mean(values);
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - m) * (values[i] - m);
  return pairwise_sum(sq) / static_cast<double>(values.size() - 1);
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw ValidationError("quantile probability outside [0, 1]");
  const double h = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double prob) {
  const auto s = sorted_copy(values);
  return quantile_sorted(s, prob);
}

std::vector<double> sorted_copy(std::span<const double> values) {
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace phenocast::stats
