#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gsal/numeric.hpp"
#include "gsal/types.hpp"

namespace gsal {

enum class Aggregation { Mean, Peak };

std::string_view to_string(Aggregation aggregation) noexcept;
Aggregation parse_aggregation(std::string_view name);

inline constexpr double kDefaultPeakPercentile = 98.0;

struct ImageSaliencyStat {
  std::string image_id;
  double mean_artefact = 0.0;  // m(X), z-scored once normalized
  double peak_fraction = 0.0;  // n(X) in [0, 1]
  std::size_t artefact_pixels = 0;
  ClassIndex true_class = 0;
  ClassIndex predicted_class = 0;
  bool correct = false;

  double value(Aggregation aggregation) const {
    return aggregation == Aggregation::Mean ? mean_artefact : peak_fraction;
  }
};

// Mean saliency over artefact pixels.
double mean_artefact_saliency(const SaliencyMap& map, const ArtefactMask& mask);

// Number of pixels in the top-(100 − percentile)% set: ⌈(1 − p/100)·H·W⌉,
// clamped to [1, H·W].
std::size_t peak_set_size(std::size_t total_pixels, double percentile);

// Fraction of the most salient pixels that fall inside the artefact. Ties in
// saliency are ranked by row-major index, lower index first.
double peak_fraction(const SaliencyMap& map, const ArtefactMask& mask,
                     double percentile = kDefaultPeakPercentile);

// Both aggregates for one image. The mask must be nonempty.
ImageSaliencyStat image_stat(const SaliencyMap& map, const ArtefactMask& mask,
                             const PredictionRecord& record,
                             double percentile = kDefaultPeakPercentile);

struct ZScoreResult {
  std::vector<ImageSaliencyStat> stats;
  double mu = 0.0;
  double sigma = 0.0;
};

// Population mean/stddev over every pixel of every map, reduced in image_id
// order so the result does not depend on input order.
Moments pixel_moments(std::span<const SaliencyMap> maps);
// Same reduction over per-image moments already computed, keyed by image_id.
Moments merge_by_id(std::vector<std::pair<std::string, Moments>> per_image);

ZScoreResult zscore_normalize(std::span<const ImageSaliencyStat> stats,
                              std::span<const SaliencyMap> maps);
ZScoreResult zscore_with(std::span<const ImageSaliencyStat> stats, const Moments& moments);
std::vector<SaliencyMap> normalize_maps(std::span<const SaliencyMap> maps, double mu, double sigma);

struct ClassSummary {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
};

struct Normalization {
  double mu = 0.0;
  double sigma = 0.0;
};

struct GlobalSaliencyReport {
  std::vector<std::string> classes;
  // Only classes with at least one image appear.
  std::map<ClassIndex, ClassSummary> per_class;
  double interclass_variance = 0.0;
  std::optional<Normalization> normalization;
  Aggregation aggregation = Aggregation::Mean;
  SaliencyMethod method = SaliencyMethod::External;
};

// Groups by true class. 95% intervals are Student-t over image-level values;
// classes with n = 1 get a degenerate interval at the point value.
GlobalSaliencyReport per_class_report(std::span<const ImageSaliencyStat> stats,
                                      std::span<const std::string> classes,
                                      Aggregation aggregation);

// Image-level values grouped by true class, each group ordered by image_id.
std::vector<std::vector<double>> group_by_class(std::span<const ImageSaliencyStat> stats,
                                                std::size_t num_classes, Aggregation aggregation);

}  // namespace gsal
