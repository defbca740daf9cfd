#include "gsal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include <boost/math/distributions/fisher_f.hpp>

#include "gsal/error.hpp"
#include "gsal/numeric.hpp"

namespace gsal {
namespace {

double normal_two_sided(double z) { return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0))); }

// Inversions in v, counted with a bottom-up merge sort. v ends up sorted.
std::int64_t count_inversions(std::vector<double>& v) {
  std::int64_t swaps = 0;
  std::vector<double> buf(v.size());
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          swaps += static_cast<std::int64_t>(mid - i);
          buf[k++] = v[j++];
        } else {
          buf[k++] = v[i++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
    }
    std::swap(v, buf);
  }
  return swaps;
}

struct TieSums {
  double pairs = 0.0;  // Σ t(t−1)/2
  double v1 = 0.0;     // Σ t(t−1)(2t+5)
  double v2 = 0.0;     // Σ t(t−1)(t−2)
};

template <typename Eq>
TieSums tie_sums(std::size_t n, Eq&& equal_to_prev) {
  TieSums s;
  std::size_t run = 1;
  auto flush = [&] {
    const double t = static_cast<double>(run);
    s.pairs += t * (t - 1.0) / 2.0;
    s.v1 += t * (t - 1.0) * (2.0 * t + 5.0);
    s.v2 += t * (t - 1.0) * (t - 2.0);
    run = 1;
  };
  for (std::size_t i = 1; i < n; ++i) {
    if (equal_to_prev(i)) {
      ++run;
    } else {
      flush();
    }
  }
  if (n > 0) flush();
  return s;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

RRACurve rra_curve(std::span<const ScoredOutcome> outcomes, std::size_t n_ticks) {
  if (outcomes.empty()) throw Error(ErrorCode::EmptyInput, "response-rate curve needs images");
  if (n_ticks < 2) throw Error(ErrorCode::BadArgument, "response-rate curve needs at least 2 ticks");

  std::vector<ScoredOutcome> sorted(outcomes.begin(), outcomes.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.saliency < b.saliency; });
  std::vector<double> saliency(sorted.size());
  std::vector<std::size_t> correct_prefix(sorted.size() + 1, 0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    saliency[i] = sorted[i].saliency;
    correct_prefix[i + 1] = correct_prefix[i] + (sorted[i].correct ? 1 : 0);
  }

  RRACurve curve;
  for (std::size_t k = 1; k <= n_ticks; ++k) {
    RRAPoint point;
    point.threshold_percentile =
        k == n_ticks ? 100.0 : static_cast<double>(k) * 100.0 / static_cast<double>(n_ticks);
    const double threshold = percentile_sorted(saliency, point.threshold_percentile);
    point.n_images = static_cast<std::size_t>(
        std::upper_bound(saliency.begin(), saliency.end(), threshold) - saliency.begin());
    point.accuracy = static_cast<double>(correct_prefix[point.n_images]) /
                     static_cast<double>(point.n_images);
    curve.points.push_back(point);
  }
  curve.aurrac = aurrac(curve);
  return curve;
}

RRACurve rra_curve(std::span<const ImageSaliencyStat> stats, Aggregation aggregation,
                   std::size_t n_ticks) {
  std::vector<ScoredOutcome> outcomes;
  outcomes.reserve(stats.size());
  for (const auto& s : stats) outcomes.push_back({s.value(aggregation), s.correct});
  return rra_curve(outcomes, n_ticks);
}

double aurrac(const RRACurve& curve) {
  const auto& pts = curve.points;
  if (pts.size() < 2) throw Error(ErrorCode::TooFewPoints, "curve needs at least 2 points");
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double dx = (pts[i].threshold_percentile - pts[i - 1].threshold_percentile) / 100.0;
    area += 0.5 * dx * (pts[i].accuracy + pts[i - 1].accuracy);
  }
  const double width = (pts.back().threshold_percentile - pts.front().threshold_percentile) / 100.0;
  return area / width;
}

std::string_view to_string(TestKind kind) noexcept {
  switch (kind) {
    case TestKind::KendallTau: return "kendall_tau";
    case TestKind::Levene: return "levene";
    case TestKind::WilcoxonSignedRank: return "wilcoxon_signed_rank";
  }
  return "unknown";
}

TestResult kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "kendall_tau: x and y lengths differ");
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "kendall_tau needs at least 2 points");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });

  const TieSums x_ties = tie_sums(n, [&](std::size_t i) { return x[order[i]] == x[order[i - 1]]; });
  const TieSums joint_ties = tie_sums(n, [&](std::size_t i) {
    return x[order[i]] == x[order[i - 1]] && y[order[i]] == y[order[i - 1]];
  });
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const std::int64_t swaps = count_inversions(ys);
  const TieSums y_ties = tie_sums(n, [&](std::size_t i) { return ys[i] == ys[i - 1]; });

  const double dn = static_cast<double>(n);
  const double n0 = dn * (dn - 1.0) / 2.0;
  const double score =
      n0 - x_ties.pairs - y_ties.pairs + joint_ties.pairs - 2.0 * static_cast<double>(swaps);
  const double denom = (n0 - x_ties.pairs) * (n0 - y_ties.pairs);
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::DegenerateDistribution, "kendall_tau undefined for a constant input");
  }

  TestResult result;
  result.test = TestKind::KendallTau;
  result.n = n;
  result.statistic = std::clamp(score / std::sqrt(denom), -1.0, 1.0);

  const double m = dn * (dn - 1.0);
  double var = (m * (2.0 * dn + 5.0) - x_ties.v1 - y_ties.v1) / 18.0 +
               2.0 * x_ties.pairs * y_ties.pairs / m;
  if (n > 2) var += x_ties.v2 * y_ties.v2 / (9.0 * m * (dn - 2.0));
  result.p_value = var > 0.0 ? normal_two_sided(score / std::sqrt(var)) : 1.0;
  return result;
}

TestResult levene_test(std::span<const std::vector<double>> groups, LeveneCenter center) {
  if (groups.size() < 2) throw Error(ErrorCode::TooFewGroups, "levene_test needs at least 2 groups");
  for (const auto& g : groups) {
    if (g.size() < 2) throw Error(ErrorCode::TooFewPoints, "levene_test groups need at least 2 members");
  }
  const std::size_t k = groups.size();
  std::vector<std::vector<double>> z(k);
  std::vector<double> z_means(k);
  std::vector<double> all_z;
  for (std::size_t i = 0; i < k; ++i) {
    const double c = center == LeveneCenter::Mean
                         ? pairwise_sum(groups[i]) / static_cast<double>(groups[i].size())
                         : median_of(groups[i]);
    for (double v : groups[i]) z[i].push_back(std::abs(v - c));
    z_means[i] = pairwise_sum(z[i]) / static_cast<double>(z[i].size());
    all_z.insert(all_z.end(), z[i].begin(), z[i].end());
  }
  const double total = static_cast<double>(all_z.size());
  const double grand = pairwise_sum(all_z) / total;

  double between = 0.0;
  double within = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    between += static_cast<double>(z[i].size()) * (z_means[i] - grand) * (z_means[i] - grand);
    for (double v : z[i]) within += (v - z_means[i]) * (v - z_means[i]);
  }

  TestResult result;
  result.test = TestKind::Levene;
  result.n = all_z.size();
  const double df1 = static_cast<double>(k - 1);
  const double df2 = total - static_cast<double>(k);
  if (between == 0.0) {
    result.statistic = 0.0;
    result.p_value = 1.0;
  } else if (within == 0.0 || df2 <= 0.0) {
    result.statistic = std::numeric_limits<double>::infinity();
    result.p_value = 0.0;
  } else {
    result.statistic = (df2 / df1) * between / within;
    const boost::math::fisher_f dist(df1, df2);
    result.p_value = std::clamp(boost::math::cdf(boost::math::complement(dist, result.statistic)), 0.0, 1.0);
  }
  return result;
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "wilcoxon: a and b lengths differ");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = b[i] - a[i];
    if (d != 0.0) diffs.push_back(d);
  }
  const std::size_t n = diffs.size();
  if (n < kWilcoxonMinPairs) {
    throw Error(ErrorCode::TooFewNonzeroDiffs, std::to_string(n) + " nonzero differences, need " +
                                                   std::to_string(kWilcoxonMinPairs));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return std::abs(diffs[i]) < std::abs(diffs[j]); });

  double w_plus = 0.0;
  double tie_term = 0.0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && std::abs(diffs[order[end]]) == std::abs(diffs[order[start]])) ++end;
    const double rank = 0.5 * static_cast<double>(start + 1 + end);  // average of start+1..end
    for (std::size_t i = start; i < end; ++i) {
      if (diffs[order[i]] > 0.0) w_plus += rank;
    }
    const double t = static_cast<double>(end - start);
    tie_term += t * t * t - t;
    start = end;
  }

  const double dn = static_cast<double>(n);
  const double mean = dn * (dn + 1.0) / 4.0;
  const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term / 48.0;
  const double dev = std::max(std::abs(w_plus - mean) - 0.5, 0.0);

  TestResult result;
  result.test = TestKind::WilcoxonSignedRank;
  result.statistic = w_plus;
  result.n = n;
  result.p_value = normal_two_sided(dev / std::sqrt(var));
  return result;
}

}  // namespace gsal
