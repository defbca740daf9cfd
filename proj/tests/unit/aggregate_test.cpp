#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "gsal/aggregate.hpp"
#include "gsal/error.hpp"
#include "oracles.hpp"

namespace gsal {
namespace {

SaliencyMap map_of(std::vector<float> v, std::size_t h, std::size_t w, std::string id = "img") {
  return SaliencyMap(std::move(id), SaliencyMethod::External, 0, Tensor({h, w}, std::move(v)));
}

ImageSaliencyStat stat(std::string id, ClassIndex cls, double m, double peak = 0.0) {
  ImageSaliencyStat s;
  s.image_id = std::move(id);
  s.true_class = cls;
  s.predicted_class = cls;
  s.mean_artefact = m;
  s.peak_fraction = peak;
  s.correct = true;
  return s;
}

TEST(MeanArtefact, UniformMap) {
  const auto map = map_of(std::vector<float>(16, 0.5f), 4, 4);
  std::vector<std::uint8_t> bits(16, 0);
  bits[3] = bits[7] = bits[12] = 1;
  EXPECT_DOUBLE_EQ(mean_artefact_saliency(map, ArtefactMask("img", 4, 4, bits)), 0.5);
}

TEST(MeanArtefact, AveragesMaskedPixelsOnly) {
  const auto map = map_of({1, 2, 3, 4}, 2, 2);
  EXPECT_DOUBLE_EQ(mean_artefact_saliency(map, ArtefactMask("img", 2, 2, {0, 1, 1, 0})), 2.5);
}

TEST(MeanArtefact, Errors) {
  const auto map = map_of({1, 2, 3, 4}, 2, 2);
  try {
    mean_artefact_saliency(map, ArtefactMask("img", 2, 2, {0, 0, 0, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyMask);
  }
  EXPECT_THROW(mean_artefact_saliency(map, ArtefactMask("img", 1, 4, {1, 0, 0, 0})), Error);
}

TEST(MeanArtefact, MatchesNaiveLoop) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t h = 1 + trial % 17, w = 1 + (trial * 7) % 23;
    const auto map = SaliencyMap("img", SaliencyMethod::External, 0, testing::random_tensor(rng, {h, w}));
    auto mask = testing::random_mask(rng, "img", h, w, 0.3);
    if (mask.pixel_count() == 0) continue;
    ASSERT_NEAR(mean_artefact_saliency(map, mask), oracle::naive_mean_artefact(map, mask), 1e-9);
  }
}

TEST(PeakSetSize, CeilingAndClamp) {
  EXPECT_EQ(peak_set_size(100, 98), 2u);
  EXPECT_EQ(peak_set_size(224 * 224, 98), 1004u);  // 1003.52 rounds up
  EXPECT_EQ(peak_set_size(4, 99.9), 1u);
  EXPECT_EQ(peak_set_size(10, 50), 5u);
  EXPECT_THROW(peak_set_size(10, 100), Error);
  EXPECT_THROW(peak_set_size(10, 0), Error);
}

TEST(PeakFraction, Examples) {
  // 10×10 map, p = 98: the two largest pixels form the peak set.
  std::vector<float> v(100, 0.0f);
  v[10] = 5.0f;
  v[55] = 4.0f;
  const auto map = map_of(v, 10, 10);
  std::vector<std::uint8_t> half(100, 0), both(100, 0), neither(100, 0);
  half[10] = 1;
  both[10] = both[55] = 1;
  neither[0] = 1;
  EXPECT_DOUBLE_EQ(peak_fraction(map, ArtefactMask("img", 10, 10, half)), 0.5);
  EXPECT_DOUBLE_EQ(peak_fraction(map, ArtefactMask("img", 10, 10, both)), 1.0);
  EXPECT_DOUBLE_EQ(peak_fraction(map, ArtefactMask("img", 10, 10, neither)), 0.0);
}

TEST(PeakFraction, TiesPreferLowerIndex) {
  const auto map = map_of(std::vector<float>(4, 1.0f), 2, 2);
  // p = 50 → k = 2 → pixels 0 and 1.
  EXPECT_DOUBLE_EQ(peak_fraction(map, ArtefactMask("img", 2, 2, {1, 1, 0, 0}), 50), 1.0);
  EXPECT_DOUBLE_EQ(peak_fraction(map, ArtefactMask("img", 2, 2, {0, 0, 1, 1}), 50), 0.0);
}

TEST(PeakFraction, MatchesFullSortAndIsScaleInvariant) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> q(-64, 64);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t h = 2 + trial % 13, w = 2 + (trial * 5) % 19;
    Tensor t({h, w});
    for (auto& v : t.data()) v = static_cast<float>(q(rng)) / 64.0f;  // plenty of ties
    const auto map = SaliencyMap("img", SaliencyMethod::External, 0, t);
    const auto mask = testing::random_mask(rng, "img", h, w, 0.25);
    for (double p : {50.0, 90.0, 98.0}) {
      const double got = peak_fraction(map, mask, p);
      ASSERT_DOUBLE_EQ(got, oracle::brute_peak_fraction(map, mask, p));
      Tensor scaled = t;
      for (auto& v : scaled.data()) v *= 8.0f;
      ASSERT_EQ(peak_fraction(SaliencyMap("img", SaliencyMethod::External, 0, scaled), mask, p), got);
    }
  }
}

TEST(ZScore, TwoPixelExample) {
  const std::vector<SaliencyMap> maps = {map_of({0, 2}, 1, 2)};
  const std::vector<ImageSaliencyStat> stats = {stat("img", 0, 2.0)};
  const auto z = zscore_normalize(stats, maps);
  EXPECT_DOUBLE_EQ(z.mu, 1.0);
  EXPECT_DOUBLE_EQ(z.sigma, 1.0);
  EXPECT_DOUBLE_EQ(z.stats[0].mean_artefact, 1.0);
}

TEST(ZScore, ConstantMapsAreDegenerate) {
  const std::vector<SaliencyMap> maps = {map_of({3, 3, 3, 3}, 2, 2)};
  const std::vector<ImageSaliencyStat> stats = {stat("img", 0, 3.0)};
  try {
    zscore_normalize(stats, maps);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateDistribution);
  }
}

TEST(ZScore, NormalizedMapsHaveZeroMeanUnitVarianceAndRenormalizeToThemselves) {
  std::mt19937_64 rng(11);
  std::vector<SaliencyMap> maps;
  for (int i = 0; i < 6; ++i) {
    maps.emplace_back("m" + std::to_string(i), SaliencyMethod::External, 0,
                      testing::random_tensor(rng, {5 + i, 7}, -2.0, 5.0));
  }
  const auto m = pixel_moments(maps);
  const auto normalized = normalize_maps(maps, m.mean, m.population_stddev());
  const auto again = pixel_moments(normalized);
  EXPECT_NEAR(again.mean, 0.0, 1e-6);
  EXPECT_NEAR(again.population_stddev(), 1.0, 1e-6);
  const auto twice = normalize_maps(normalized, again.mean, again.population_stddev());
  for (std::size_t i = 0; i < maps.size(); ++i) {
    for (std::size_t p = 0; p < maps[i].values.size(); ++p) {
      ASSERT_NEAR(twice[i].values[p], normalized[i].values[p], 1e-5);
    }
  }
}

TEST(ZScore, MomentsIgnoreInputOrder) {
  std::mt19937_64 rng(12);
  std::vector<SaliencyMap> maps;
  for (int i = 0; i < 9; ++i) {
    maps.emplace_back("m" + std::to_string(i), SaliencyMethod::External, 0,
                      testing::random_tensor(rng, {4, 4 + i}));
  }
  const auto a = pixel_moments(maps);
  std::shuffle(maps.begin(), maps.end(), rng);
  const auto b = pixel_moments(maps);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.m2, b.m2);
  EXPECT_EQ(a.count, b.count);
}

TEST(PerClassReport, InterclassVariance) {
  const std::vector<std::string> classes = {"A", "B"};
  const std::vector<ImageSaliencyStat> stats = {stat("a1", 0, 1), stat("a2", 0, 1), stat("a3", 0, 1),
                                                stat("b1", 1, 3), stat("b2", 1, 3), stat("b3", 1, 3)};
  const auto r = per_class_report(stats, classes, Aggregation::Mean);
  EXPECT_DOUBLE_EQ(r.per_class.at(0).mean, 1.0);
  EXPECT_DOUBLE_EQ(r.per_class.at(1).mean, 3.0);
  EXPECT_DOUBLE_EQ(r.interclass_variance, 1.0);
  EXPECT_DOUBLE_EQ(r.per_class.at(0).ci_low, 1.0);
  EXPECT_DOUBLE_EQ(r.per_class.at(0).ci_high, 1.0);
}

TEST(PerClassReport, SingleClassHasZeroVarianceAndSingletonsHaveDegenerateIntervals) {
  const std::vector<std::string> classes = {"A", "B"};
  const std::vector<ImageSaliencyStat> stats = {stat("a1", 0, 0.7)};
  const auto r = per_class_report(stats, classes, Aggregation::Mean);
  EXPECT_EQ(r.per_class.size(), 1u);
  EXPECT_DOUBLE_EQ(r.interclass_variance, 0.0);
  EXPECT_DOUBLE_EQ(r.per_class.at(0).ci_low, 0.7);
  EXPECT_DOUBLE_EQ(r.per_class.at(0).ci_high, 0.7);
  EXPECT_EQ(r.per_class.at(0).n, 1u);
}

TEST(PerClassReport, StudentIntervalForThreeValues) {
  // mean 2, sample sd 1, t(0.975, 2) = 4.302652729749464.
  const std::vector<std::string> classes = {"A"};
  const std::vector<ImageSaliencyStat> stats = {stat("a", 0, 1), stat("b", 0, 2), stat("c", 0, 3)};
  const auto r = per_class_report(stats, classes, Aggregation::Mean);
  const double half = 4.302652729749464 / std::sqrt(3.0);
  EXPECT_NEAR(r.per_class.at(0).ci_low, 2 - half, 1e-12);
  EXPECT_NEAR(r.per_class.at(0).ci_high, 2 + half, 1e-12);
}

TEST(PerClassReport, PermutationInvariantAndShiftEquivariant) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::vector<std::string> classes = {"A", "B", "C", "D"};
  std::vector<ImageSaliencyStat> stats;
  for (int i = 0; i < 40; ++i) stats.push_back(stat("i" + std::to_string(i), i % 4, g(rng) + i % 4));
  const auto base = per_class_report(stats, classes, Aggregation::Mean);

  auto shuffled = stats;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto perm = per_class_report(shuffled, classes, Aggregation::Mean);
  EXPECT_EQ(perm.interclass_variance, base.interclass_variance);
  for (const auto& [c, s] : base.per_class) EXPECT_EQ(perm.per_class.at(c).mean, s.mean);

  auto shifted = stats;
  for (auto& s : shifted) s.mean_artefact += 10.0;
  const auto shift = per_class_report(shifted, classes, Aggregation::Mean);
  EXPECT_NEAR(shift.interclass_variance, base.interclass_variance, 1e-9);
  for (const auto& [c, s] : base.per_class) {
    EXPECT_NEAR(shift.per_class.at(c).mean, s.mean + 10.0, 1e-9);
    EXPECT_NEAR(shift.per_class.at(c).ci_high - shift.per_class.at(c).ci_low, s.ci_high - s.ci_low, 1e-9);
  }
}

TEST(PerClassReport, IntervalCoverage) {
  // 2000 draws of 8 normal values; the 95% interval should cover the true
  // mean about 95% of the time. 3σ of a binomial(2000, 0.95) is ~1.5%.
  std::mt19937_64 rng(14);
  std::normal_distribution<double> g(4.0, 2.0);
  const std::vector<std::string> classes = {"A"};
  int covered = 0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    std::vector<ImageSaliencyStat> stats;
    for (int i = 0; i < 8; ++i) stats.push_back(stat("i" + std::to_string(i), 0, g(rng)));
    const auto s = per_class_report(stats, classes, Aggregation::Mean).per_class.at(0);
    if (s.ci_low <= 4.0 && 4.0 <= s.ci_high) ++covered;
  }
  EXPECT_NEAR(covered / static_cast<double>(reps), 0.95, 3 * std::sqrt(0.95 * 0.05 / reps));
}

TEST(PerClassReport, PeakAggregationUsesPeakValues) {
  const std::vector<std::string> classes = {"A", "B"};
  const std::vector<ImageSaliencyStat> stats = {stat("a", 0, 9, 0.25), stat("b", 1, 9, 0.75)};
  const auto r = per_class_report(stats, classes, Aggregation::Peak);
  EXPECT_DOUBLE_EQ(r.per_class.at(0).mean, 0.25);
  EXPECT_DOUBLE_EQ(r.per_class.at(1).mean, 0.75);
  EXPECT_DOUBLE_EQ(r.interclass_variance, 0.0625);
}

TEST(GroupByClass, OrderedById) {
  const std::vector<ImageSaliencyStat> stats = {stat("b", 0, 2), stat("a", 0, 1), stat("c", 1, 3)};
  const auto groups = group_by_class(stats, 3, Aggregation::Mean);
  ASSERT_EQ(groups.size(), 3u);
  EXPECT_EQ(groups[0], (std::vector<double>{1, 2}));
  EXPECT_EQ(groups[1], (std::vector<double>{3}));
  EXPECT_TRUE(groups[2].empty());
}

}  // namespace
}  // namespace gsal
