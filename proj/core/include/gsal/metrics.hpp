#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "gsal/aggregate.hpp"

namespace gsal {

struct RRAPoint {
  double threshold_percentile = 0.0;
  std::size_t n_images = 0;
  double accuracy = 0.0;
};

// Response-rate accuracy curve: accuracy of the subset of images whose
// artefact saliency is at most the k-th tick percentile.
struct RRACurve {
  std::vector<RRAPoint> points;
  double aurrac = 0.0;
};

struct ScoredOutcome {
  double saliency = 0.0;
  bool correct = false;
};

inline constexpr std::size_t kDefaultRraTicks = 10;

// Ticks at k·100/n_ticks for k = 1..n_ticks; thresholds are linear-interpolated
// percentiles of the saliency sample and subsets are inclusive (≤).
RRACurve rra_curve(std::span<const ScoredOutcome> outcomes, std::size_t n_ticks = kDefaultRraTicks);
RRACurve rra_curve(std::span<const ImageSaliencyStat> stats, Aggregation aggregation,
                   std::size_t n_ticks = kDefaultRraTicks);

// Trapezoidal area under (threshold/100, accuracy), divided by the width of
// the tick range so a flat curve at accuracy a integrates to a.
double aurrac(const RRACurve& curve);

enum class TestKind { KendallTau, Levene, WilcoxonSignedRank };
std::string_view to_string(TestKind kind) noexcept;

struct TestResult {
  TestKind test = TestKind::KendallTau;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

// Kendall's τ-b, O(n log n). Two-sided p-value from the normal approximation
// of the concordance score with tie-corrected variance. Throws
// DegenerateDistribution when either input is constant.
TestResult kendall_tau(std::span<const double> x, std::span<const double> y);

enum class LeveneCenter { Mean, Median };

// Levene's W (mean-centred by default; Median gives Brown-Forsythe) with a
// p-value from F(k−1, N−k). W is +inf when within-group spread is zero but the
// group spreads differ.
TestResult levene_test(std::span<const std::vector<double>> groups,
                       LeveneCenter center = LeveneCenter::Mean);

inline constexpr std::size_t kWilcoxonMinPairs = 10;

// Signed-rank test on d = b − a. W is the rank sum of positive differences
// (zeros dropped, average ranks for ties); two-sided p-value from the normal
// approximation with tie-corrected variance and continuity correction.
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

}  // namespace gsal
