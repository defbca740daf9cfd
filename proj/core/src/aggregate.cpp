#include "gsal/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "gsal/error.hpp"

namespace gsal {
namespace {

void require_same_grid(const SaliencyMap& map, const ArtefactMask& mask) {
  if (map.height() != mask.height() || map.width() != mask.width()) {
    throw Error(ErrorCode::ShapeMismatch, "saliency map is " + std::to_string(map.height()) + "x" +
                                              std::to_string(map.width()) + ", mask is " +
                                              std::to_string(mask.height()) + "x" +
                                              std::to_string(mask.width()))
        .with_image(map.image_id);
  }
}

}  // namespace

std::string_view to_string(Aggregation aggregation) noexcept {
  return aggregation == Aggregation::Mean ? "mean" : "peak";
}

Aggregation parse_aggregation(std::string_view name) {
  if (name == "mean") return Aggregation::Mean;
  if (name == "peak") return Aggregation::Peak;
  throw Error(ErrorCode::BadArgument, "unknown aggregation '" + std::string(name) + "'");
}

double mean_artefact_saliency(const SaliencyMap& map, const ArtefactMask& mask) {
  require_same_grid(map, mask);
  if (mask.pixel_count() == 0) {
    throw Error(ErrorCode::EmptyMask, "artefact mask has no pixels").with_image(map.image_id);
  }
  std::vector<double> inside;
  inside.reserve(mask.pixel_count());
  const auto values = map.values.data();
  for (std::size_t p = 0; p < values.size(); ++p) {
    if (mask[p]) inside.push_back(values[p]);
  }
  return pairwise_sum(inside) / static_cast<double>(inside.size());
}

std::size_t peak_set_size(std::size_t total_pixels, double percentile) {
  if (!(percentile > 0.0 && percentile < 100.0)) {
    throw Error(ErrorCode::BadPercentile, "peak percentile must lie in (0, 100)");
  }
  // (100 − p) is exact for integral p, so 98 on 100 pixels yields exactly 2.
  const double exact = (100.0 - percentile) * static_cast<double>(total_pixels) / 100.0;
  auto k = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::clamp<std::size_t>(k, 1, total_pixels);
}

double peak_fraction(const SaliencyMap& map, const ArtefactMask& mask, double percentile) {
  require_same_grid(map, mask);
  const auto values = map.values.data();
  const std::size_t k = peak_set_size(values.size(), percentile);
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto more_salient = [&](std::size_t a, std::size_t b) {
    return values[a] != values[b] ? values[a] > values[b] : a < b;
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(),
                   more_salient);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += mask[order[i]] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

ImageSaliencyStat image_stat(const SaliencyMap& map, const ArtefactMask& mask,
                             const PredictionRecord& record, double percentile) {
  ImageSaliencyStat stat;
  stat.image_id = map.image_id;
  stat.mean_artefact = mean_artefact_saliency(map, mask);
  stat.peak_fraction = peak_fraction(map, mask, percentile);
  stat.artefact_pixels = mask.pixel_count();
  stat.true_class = record.true_class;
  stat.predicted_class = record.predicted_class;
  stat.correct = record.correct();
  return stat;
}

Moments merge_by_id(std::vector<std::pair<std::string, Moments>> per_image) {
  std::sort(per_image.begin(), per_image.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Moments> ordered;
  ordered.reserve(per_image.size());
  for (auto& [id, m] : per_image) ordered.push_back(m);
  return merge_pairwise(ordered);
}

Moments pixel_moments(std::span<const SaliencyMap> maps) {
  std::vector<std::pair<std::string, Moments>> parts;
  parts.reserve(maps.size());
  for (const auto& m : maps) parts.emplace_back(m.image_id, moments_of(m.values.data()));
  return merge_by_id(std::move(parts));
}

ZScoreResult zscore_with(std::span<const ImageSaliencyStat> stats, const Moments& moments) {
  if (moments.count == 0) throw Error(ErrorCode::EmptyInput, "no saliency pixels to normalize over");
  const double sigma = moments.population_stddev();
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::DegenerateDistribution, "saliency pixels have zero variance");
  }
  ZScoreResult out;
  out.mu = moments.mean;
  out.sigma = sigma;
  out.stats.assign(stats.begin(), stats.end());
  for (auto& s : out.stats) s.mean_artefact = (s.mean_artefact - out.mu) / out.sigma;
  return out;
}

ZScoreResult zscore_normalize(std::span<const ImageSaliencyStat> stats,
                              std::span<const SaliencyMap> maps) {
  if (maps.empty()) throw Error(ErrorCode::EmptyInput, "no saliency maps to normalize over");
  return zscore_with(stats, pixel_moments(maps));
}

std::vector<SaliencyMap> normalize_maps(std::span<const SaliencyMap> maps, double mu, double sigma) {
  std::vector<SaliencyMap> out;
  out.reserve(maps.size());
  for (const auto& m : maps) {
    Tensor values = m.values;
    for (auto& v : values.data()) v = static_cast<float>((static_cast<double>(v) - mu) / sigma);
    out.emplace_back(m.image_id, m.method, m.target_class, std::move(values));
  }
  return out;
}

std::vector<std::vector<double>> group_by_class(std::span<const ImageSaliencyStat> stats,
                                                std::size_t num_classes, Aggregation aggregation) {
  std::vector<std::vector<const ImageSaliencyStat*>> buckets(num_classes);
  for (const auto& s : stats) {
    if (s.true_class >= num_classes) {
      throw Error(ErrorCode::ClassOutOfRange, "true class outside class list").with_image(s.image_id);
    }
    buckets[s.true_class].push_back(&s);
  }
  std::vector<std::vector<double>> groups(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto& b = buckets[c];
    std::sort(b.begin(), b.end(), [](const auto* a, const auto* z) {
      return a->image_id != z->image_id ? a->image_id < z->image_id : a->mean_artefact < z->mean_artefact;
    });
    for (const auto* s : b) groups[c].push_back(s->value(aggregation));
  }
  return groups;
}

GlobalSaliencyReport per_class_report(std::span<const ImageSaliencyStat> stats,
                                      std::span<const std::string> classes,
                                      Aggregation aggregation) {
  if (stats.empty()) throw Error(ErrorCode::EmptyInput, "no image statistics to report");
  GlobalSaliencyReport report;
  report.classes.assign(classes.begin(), classes.end());
  report.aggregation = aggregation;

  const auto groups = group_by_class(stats, classes.size(), aggregation);
  std::vector<double> class_means;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto& g = groups[c];
    if (g.empty()) continue;
    const Moments m = moments_of(g);
    ClassSummary summary;
    summary.n = g.size();
    summary.mean = m.mean;
    summary.ci_low = summary.ci_high = m.mean;
    if (g.size() >= 2) {
      const double n = static_cast<double>(g.size());
      const double sample_sd = std::sqrt(m.m2 / (n - 1.0));
      const boost::math::students_t t_dist(n - 1.0);
      const double half = boost::math::quantile(t_dist, 0.975) * sample_sd / std::sqrt(n);
      summary.ci_low = m.mean - half;
      summary.ci_high = m.mean + half;
    }
    report.per_class.emplace(c, summary);
    class_means.push_back(m.mean);
  }
  report.interclass_variance = moments_of(class_means).population_variance();
  return report;
}

}  // namespace gsal
