#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gsal/types.hpp"

namespace gsal {

struct ManifestEntry {
  std::string image_id;
  ClassIndex label = 0;
  std::filesystem::path image;
  std::optional<std::filesystem::path> mask;
  // Keyed by method spelling ("gradcam", "competitive", "external").
  std::map<std::string, std::filesystem::path> saliency;
  // K×H×W per-class gradient⊙input.
  std::optional<std::filesystem::path> gradients;
  // C×h×w activations of the grad-CAM layer.
  std::optional<std::filesystem::path> activations;
  // K×C×h×w gradients of each class score w.r.t. that layer.
  std::optional<std::filesystem::path> layer_gradients;
  std::string split;
  // Optional inline softmax output.
  std::optional<std::vector<double>> confidences;
};

// JSON-Lines manifest. Line 1 is {"classes":[...]}, every following non-blank
// line describes one image. Relative paths resolve against the manifest's
// directory.
struct DatasetManifest {
  std::vector<std::string> classes;
  std::vector<ManifestEntry> entries;

  std::optional<ClassIndex> class_index(std::string_view name) const;
  const ManifestEntry* find(std::string_view image_id) const;
};

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Serializes with paths written relative to base_dir where possible.
std::string format_manifest(const DatasetManifest& manifest, const std::filesystem::path& base_dir);

// Prediction-record file: same JSON-Lines layout as the manifest, header
// {"classes":[...]} followed by {"image_id","true_class","confidences"} lines.
// "predicted_class", when present, must agree with the argmax.
struct PredictionSet {
  std::vector<std::string> classes;
  std::vector<PredictionRecord> records;

  const PredictionRecord* find(std::string_view image_id) const;
};

PredictionSet parse_predictions(std::string_view text);
PredictionSet load_predictions(const std::filesystem::path& path);
std::string format_predictions(const PredictionSet& predictions);

}  // namespace gsal
