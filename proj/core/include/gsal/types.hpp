#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gsal/tensor.hpp"

namespace gsal {

using ClassIndex = std::size_t;

enum class SaliencyMethod { GradCAM, CompetitiveGradInput, External };

std::string_view to_string(SaliencyMethod method) noexcept;
// Accepts the CLI/manifest spellings "gradcam", "competitive", "external".
SaliencyMethod parse_saliency_method(std::string_view name);

// Per-image importance grid g_f(X), always rank-2 (H×W).
struct SaliencyMap {
  SaliencyMap(std::string image_id, SaliencyMethod method, ClassIndex target_class, Tensor values);

  std::string image_id;
  SaliencyMethod method;
  ClassIndex target_class;
  Tensor values;

  std::size_t height() const { return values.dim(0); }
  std::size_t width() const { return values.dim(1); }
};

// Boolean artefact segmentation A(X) over an H×W grid.
class ArtefactMask {
 public:
  ArtefactMask(std::string image_id, std::size_t height, std::size_t width,
               std::vector<std::uint8_t> bits);

  // Thresholds a real-valued (possibly blurred) mask at > 0.5.
  static ArtefactMask from_tensor(std::string image_id, const Tensor& values);

  const std::string& image_id() const noexcept { return image_id_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return bits_.size(); }
  std::size_t pixel_count() const noexcept { return pixel_count_; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  bool at(std::size_t row, std::size_t col) const { return bits_[row * width_ + col] != 0; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

 private:
  std::string image_id_;
  std::size_t height_;
  std::size_t width_;
  std::vector<std::uint8_t> bits_;
  std::size_t pixel_count_;
};

// Accepts f32 or u8 containers of shape [H,W]; values > 0.5 are artefact.
ArtefactMask load_mask(const std::filesystem::path& path, std::string image_id);
void save_mask(const std::filesystem::path& path, const ArtefactMask& mask);

// Softmax output for one image plus its labels.
struct PredictionRecord {
  PredictionRecord(std::string image_id, ClassIndex true_class, std::vector<double> confidences);

  std::string image_id;
  ClassIndex true_class;
  ClassIndex predicted_class;
  std::vector<double> confidences;

  double confidence() const { return confidences[predicted_class]; }
  bool correct() const noexcept { return predicted_class == true_class; }
};

// Index of the largest entry; the lowest index wins ties.
ClassIndex argmax(std::span<const double> values);

inline constexpr double kConfidenceSumTolerance = 1e-5;

}  // namespace gsal
