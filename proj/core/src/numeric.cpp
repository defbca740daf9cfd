#include "gsal/numeric.hpp"

#include <cmath>
#include <vector>

#include "gsal/error.hpp"

namespace gsal {
namespace {

template <typename T>
double pairwise_impl(std::span<const T> v) {
  constexpr std::size_t kBlock = 64;
  if (v.size() <= kBlock) {
    double s = 0.0;
    for (T x : v) s += static_cast<double>(x);
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_impl(v.first(half)) + pairwise_impl(v.subspan(half));
}

template <typename T>
Moments moments_impl(std::span<const T> v) {
  Moments m;
  if (v.empty()) return m;
  m.count = static_cast<double>(v.size());
  m.mean = pairwise_impl(v) / m.count;
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = static_cast<double>(v[i]) - m.mean;
    sq[i] = d * d;
  }
  m.m2 = pairwise_impl(std::span<const double>(sq));
  return m;
}

}  // namespace

double pairwise_sum(std::span<const double> values) { return pairwise_impl(values); }
double pairwise_sum(std::span<const float> values) { return pairwise_impl(values); }

double Moments::population_stddev() const { return std::sqrt(population_variance()); }

Moments moments_of(std::span<const float> values) { return moments_impl(values); }
Moments moments_of(std::span<const double> values) { return moments_impl(values); }

Moments merge(const Moments& a, const Moments& b) {
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  Moments out;
  out.count = a.count + b.count;
  const double delta = b.mean - a.mean;
  out.mean = a.mean + delta * (b.count / out.count);
  out.m2 = a.m2 + b.m2 + delta * delta * (a.count * b.count / out.count);
  return out;
}

Moments merge_pairwise(std::span<const Moments> parts) {
  if (parts.empty()) return {};
  if (parts.size() == 1) return parts[0];
  const std::size_t half = parts.size() / 2;
  return merge(merge_pairwise(parts.first(half)), merge_pairwise(parts.subspan(half)));
}

double percentile_sorted(std::span<const double> sorted, double percent) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyInput, "percentile of empty sample");
  if (!(percent >= 0.0 && percent <= 100.0)) {
    throw Error(ErrorCode::BadPercentile, "percentile must lie in [0, 100]");
  }
  const double pos = percent / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || lo == hi) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace gsal
