#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gsal/manifest.hpp"
#include "gsal/tensor.hpp"
#include "gsal/types.hpp"

namespace gsal {

inline constexpr std::size_t kDefaultMinInkPixels = 100;

// image_id → artefact pixel count. Co-occurrence and sampling only need the
// counts, so callers can load each mask once and discard the bits.
using InkCounts = std::unordered_map<std::string, std::size_t>;

InkCounts ink_counts(std::span<const ArtefactMask> masks);
// Loads every entry's mask. Entries without a mask path raise MissingMask.
InkCounts load_ink_counts(const DatasetManifest& manifest, std::size_t threads = 1);

struct ClassCooccurrence {
  std::size_t inked = 0;
  std::size_t uninked = 0;
  std::optional<double> p_ink_given_class;  // empty when the class has no images
};

struct CooccurrenceTable {
  std::vector<std::string> classes;
  std::vector<ClassCooccurrence> per_class;
  double overall_p_ink = 0.0;
  std::size_t min_pixels = kDefaultMinInkPixels;
};

// An image is inked iff its mask has strictly more than min_pixels pixels.
CooccurrenceTable cooccurrence(const DatasetManifest& manifest, const InkCounts& counts,
                               std::size_t min_pixels = kDefaultMinInkPixels);

struct PlanClassCounts {
  std::size_t inked = 0;
  std::size_t uninked = 0;
};

struct SamplingPlan {
  std::vector<std::string> selected_ids;  // manifest order
  std::uint64_t seed = 0;
  double ratio = 0.0;
  std::vector<PlanClassCounts> per_class_counts;
};

// Every inked image plus ⌊ratio·inked_c⌋ uninked images of each class c, drawn
// uniformly without replacement from the class's id-sorted uninked pool.
// One SplitMix64 stream seeded with `seed` is consumed class by class in
// class-list order (partial Fisher-Yates).
SamplingPlan unbiased_plan(const DatasetManifest& manifest, const InkCounts& counts, double ratio,
                           std::uint64_t seed, std::size_t min_pixels = kDefaultMinInkPixels);

DatasetManifest select(const DatasetManifest& manifest, std::span<const std::string> ids);

DatasetManifest ink_only_filter(const DatasetManifest& manifest, const InkCounts& counts,
                                std::size_t min_pixels = kDefaultMinInkPixels);

enum class AblationMode { KeepArtefact };

// Replaces every non-artefact pixel of an H×W×C image with the per-channel
// mean over all pixels of the original image.
Tensor ablate(const Tensor& image, const ArtefactMask& mask,
              AblationMode mode = AblationMode::KeepArtefact);

struct InvarianceReport {
  std::vector<std::string> classes;
  std::size_t compared = 0;
  std::size_t unchanged = 0;
  double invariance_fraction = 0.0;
  // changed_to[c]: images whose prediction moved to class c after ablation.
  std::vector<std::size_t> changed_to;
  std::size_t missing_in_ablated = 0;
};

// Compares predictions on original vs ablated images, matched by image_id.
InvarianceReport prediction_invariance(const PredictionSet& original, const PredictionSet& ablated);

}  // namespace gsal
