#include "gsal/datasetops.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "gsal/error.hpp"
#include "gsal/numeric.hpp"
#include "gsal/parallel.hpp"
#include "gsal/rng.hpp"

namespace gsal {
namespace {

std::size_t count_for(const InkCounts& counts, const ManifestEntry& entry) {
  auto it = counts.find(entry.image_id);
  if (it == counts.end()) {
    throw Error(ErrorCode::MissingMask, "no artefact mask for image '" + entry.image_id + "'")
        .with_image(entry.image_id);
  }
  return it->second;
}

}  // namespace

InkCounts ink_counts(std::span<const ArtefactMask> masks) {
  InkCounts out;
  for (const auto& m : masks) out[m.image_id()] = m.pixel_count();
  return out;
}

InkCounts load_ink_counts(const DatasetManifest& manifest, std::size_t threads) {
  std::vector<std::size_t> counts(manifest.entries.size());
  parallel_for(manifest.entries.size(), threads, [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    if (!e.mask) {
      throw Error(ErrorCode::MissingMask, "manifest entry '" + e.image_id + "' has no mask")
          .with_image(e.image_id);
    }
    counts[i] = load_mask(*e.mask, e.image_id).pixel_count();
  });
  InkCounts out;
  for (std::size_t i = 0; i < counts.size(); ++i) out[manifest.entries[i].image_id] = counts[i];
  return out;
}

CooccurrenceTable cooccurrence(const DatasetManifest& manifest, const InkCounts& counts,
                               std::size_t min_pixels) {
  CooccurrenceTable table;
  table.classes = manifest.classes;
  table.min_pixels = min_pixels;
  table.per_class.resize(manifest.classes.size());
  std::size_t inked_total = 0;
  for (const auto& e : manifest.entries) {
    auto& row = table.per_class.at(e.label);
    if (count_for(counts, e) > min_pixels) {
      ++row.inked;
      ++inked_total;
    } else {
      ++row.uninked;
    }
  }
  for (auto& row : table.per_class) {
    const std::size_t n = row.inked + row.uninked;
    if (n > 0) row.p_ink_given_class = static_cast<double>(row.inked) / static_cast<double>(n);
  }
  if (!manifest.entries.empty()) {
    table.overall_p_ink =
        static_cast<double>(inked_total) / static_cast<double>(manifest.entries.size());
  }
  return table;
}

SamplingPlan unbiased_plan(const DatasetManifest& manifest, const InkCounts& counts, double ratio,
                           std::uint64_t seed, std::size_t min_pixels) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw Error(ErrorCode::BadRatio, "sampling ratio must be positive and finite");
  }
  const std::size_t k = manifest.classes.size();
  std::vector<std::vector<std::string>> inked(k);
  std::vector<std::vector<std::string>> pool(k);
  for (const auto& e : manifest.entries) {
    (count_for(counts, e) > min_pixels ? inked : pool).at(e.label).push_back(e.image_id);
  }

  SamplingPlan plan;
  plan.seed = seed;
  plan.ratio = ratio;
  plan.per_class_counts.resize(k);
  std::unordered_set<std::string> chosen;
  SplitMix64 rng(seed);
  for (std::size_t c = 0; c < k; ++c) {
    // The epsilon keeps products like 0.29·100 from flooring to 28.
    const double exact = ratio * static_cast<double>(inked[c].size());
    const auto need = static_cast<std::size_t>(std::floor(exact + 1e-9 * std::max(1.0, exact)));
    auto& candidates = pool[c];
    if (candidates.size() < need) {
      throw Error(ErrorCode::InsufficientUninked,
                  "class '" + manifest.classes[c] + "' has " + std::to_string(candidates.size()) +
                      " uninked images, plan needs " + std::to_string(need));
    }
    std::sort(candidates.begin(), candidates.end());
    for (std::size_t i = 0; i < need; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.uniform(candidates.size() - i));
      std::swap(candidates[i], candidates[j]);
      chosen.insert(candidates[i]);
    }
    for (const auto& id : inked[c]) chosen.insert(id);
    plan.per_class_counts[c] = {inked[c].size(), need};
  }
  for (const auto& e : manifest.entries) {
    if (chosen.contains(e.image_id)) plan.selected_ids.push_back(e.image_id);
  }
  return plan;
}

DatasetManifest select(const DatasetManifest& manifest, std::span<const std::string> ids) {
  std::unordered_set<std::string> wanted(ids.begin(), ids.end());
  DatasetManifest out;
  out.classes = manifest.classes;
  for (const auto& e : manifest.entries) {
    if (wanted.contains(e.image_id)) out.entries.push_back(e);
  }
  return out;
}

DatasetManifest ink_only_filter(const DatasetManifest& manifest, const InkCounts& counts,
                                std::size_t min_pixels) {
  DatasetManifest out;
  out.classes = manifest.classes;
  for (const auto& e : manifest.entries) {
    if (count_for(counts, e) > min_pixels) out.entries.push_back(e);
  }
  return out;
}

Tensor ablate(const Tensor& image, const ArtefactMask& mask, AblationMode mode) {
  (void)mode;  // KeepArtefact is the only mode
  if (image.rank() != 3 || image.dim(0) != mask.height() || image.dim(1) != mask.width()) {
    throw Error(ErrorCode::ShapeMismatch, "image must be H×W×C matching the mask grid")
        .with_image(mask.image_id());
  }
  const std::size_t pixels = mask.size();
  const std::size_t channels = image.dim(2);
  std::vector<float> mean(channels);
  std::vector<double> channel(pixels);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < pixels; ++p) channel[p] = image[p * channels + c];
    mean[c] = static_cast<float>(pairwise_sum(channel) / static_cast<double>(pixels));
  }
  Tensor out = image;
  for (std::size_t p = 0; p < pixels; ++p) {
    if (mask[p]) continue;
    for (std::size_t c = 0; c < channels; ++c) out[p * channels + c] = mean[c];
  }
  return out;
}

InvarianceReport prediction_invariance(const PredictionSet& original, const PredictionSet& ablated) {
  if (original.classes != ablated.classes) {
    throw Error(ErrorCode::IncompatibleReports, "prediction files use different class lists");
  }
  std::unordered_map<std::string, const PredictionRecord*> by_id;
  for (const auto& r : ablated.records) by_id.emplace(r.image_id, &r);

  InvarianceReport report;
  report.classes = original.classes;
  report.changed_to.assign(original.classes.size(), 0);
  for (const auto& r : original.records) {
    auto it = by_id.find(r.image_id);
    if (it == by_id.end()) {
      ++report.missing_in_ablated;
      continue;
    }
    ++report.compared;
    if (it->second->predicted_class == r.predicted_class) {
      ++report.unchanged;
    } else {
      ++report.changed_to[it->second->predicted_class];
    }
  }
  if (report.compared == 0) throw Error(ErrorCode::EmptyInput, "no image ids in common");
  report.invariance_fraction =
      static_cast<double>(report.unchanged) / static_cast<double>(report.compared);
  return report;
}

}  // namespace gsal
