#pragma once

#include <cstddef>
#include <span>

namespace gsal {

// Recursive pairwise summation. Result depends only on element order, never
// on thread count.
double pairwise_sum(std::span<const double> values);
double pairwise_sum(std::span<const float> values);

// Count/mean/sum-of-squared-deviations triple, mergeable with Chan's update.
struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  double population_variance() const { return count > 0 ? m2 / count : 0.0; }
  double population_stddev() const;
};

Moments moments_of(std::span<const float> values);
Moments moments_of(std::span<const double> values);
Moments merge(const Moments& a, const Moments& b);
// Tree-shaped merge over the given order; deterministic for a fixed order.
Moments merge_pairwise(std::span<const Moments> parts);

// Linear-interpolation percentile (numpy's default) over ascending data.
// percent is in [0, 100].
double percentile_sorted(std::span<const double> sorted, double percent);

}  // namespace gsal
