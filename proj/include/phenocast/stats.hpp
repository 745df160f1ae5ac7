#pragma once

#include <span>
#include <vector>

namespace phenocast::stats {

/// Pairwise summation; the result depends only on the element order.
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);

/// Unbiased (n - 1) sample variance. Requires at least two values.
double sample_variance(std::span<const double> values);

/// Type-7 (linear interpolation) quantile of an ascending-sorted sample.
double quantile_sorted(std::span<const double> sorted, double prob);

/// Type-7 quantile of an unsorted sample.
double quantile(std::span<const double> values, double prob);

std::vector<double> sorted_copy(std::span<const double> values);

}  // namespace phenocast::stats
