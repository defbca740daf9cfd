#include "gsal/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gsal/error.hpp"

namespace gsal {

std::string_view to_string(SaliencyMethod method) noexcept {
  switch (method) {
    case SaliencyMethod::GradCAM: return "gradcam";
    case SaliencyMethod::CompetitiveGradInput: return "competitive";
    case SaliencyMethod::External: return "external";
  }
  return "external";
}

SaliencyMethod parse_saliency_method(std::string_view name) {
  if (name == "gradcam") return SaliencyMethod::GradCAM;
  if (name == "competitive") return SaliencyMethod::CompetitiveGradInput;
  if (name == "external") return SaliencyMethod::External;
  throw Error(ErrorCode::BadArgument, "unknown saliency method '" + std::string(name) + "'");
}

SaliencyMap::SaliencyMap(std::string id, SaliencyMethod m, ClassIndex target, Tensor v)
    : image_id(std::move(id)), method(m), target_class(target), values(std::move(v)) {
  if (values.rank() != 2) {
    throw Error(ErrorCode::ShapeMismatch, "saliency map must be rank 2").with_image(image_id);
  }
}

ArtefactMask::ArtefactMask(std::string image_id, std::size_t height, std::size_t width,
                           std::vector<std::uint8_t> bits)
    : image_id_(std::move(image_id)), height_(height), width_(width), bits_(std::move(bits)) {
  if (height_ * width_ != bits_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "mask bit count does not match H*W").with_image(image_id_);
  }
  for (auto& b : bits_) b = b != 0 ? 1 : 0;
  pixel_count_ = static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

ArtefactMask ArtefactMask::from_tensor(std::string image_id, const Tensor& values) {
  if (values.rank() != 2) {
    throw Error(ErrorCode::ShapeMismatch, "mask must be rank 2").with_image(image_id);
  }
  std::vector<std::uint8_t> bits(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) bits[i] = values[i] > 0.5f ? 1 : 0;
  return ArtefactMask(std::move(image_id), values.dim(0), values.dim(1), std::move(bits));
}

ArtefactMask load_mask(const std::filesystem::path& path, std::string image_id) {
  const std::string bytes = read_file(path);
  try {
    RawArray raw = decode_array(bytes);
    if (raw.shape.size() != 2) throw Error(ErrorCode::ShapeMismatch, "mask must be rank 2");
    std::vector<std::uint8_t> bits(raw.values.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = raw.values[i] > 0.5f ? 1 : 0;
    return ArtefactMask(image_id, raw.shape[0], raw.shape[1], std::move(bits));
  } catch (Error& e) {
    throw e.with_path(path.string()).with_image(image_id);
  }
}

void save_mask(const std::filesystem::path& path, const ArtefactMask& mask) {
  const std::size_t shape[] = {mask.height(), mask.width()};
  write_file(path, encode_u8(shape, mask.bits()));
}

ClassIndex argmax(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "argmax of empty vector");
  ClassIndex best = 0;
  for (ClassIndex i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

PredictionRecord::PredictionRecord(std::string id, ClassIndex truth, std::vector<double> conf)
    : image_id(std::move(id)), true_class(truth), predicted_class(0), confidences(std::move(conf)) {
  if (confidences.empty()) {
    throw Error(ErrorCode::EmptyInput, "prediction has no confidences").with_image(image_id);
  }
  for (double c : confidences) {
    if (!std::isfinite(c)) {
      throw Error(ErrorCode::NonFiniteValue, "non-finite confidence").with_image(image_id);
    }
  }
  const double total = std::accumulate(confidences.begin(), confidences.end(), 0.0);
  if (std::abs(total - 1.0) > kConfidenceSumTolerance) {
    throw Error(ErrorCode::BadArgument, "confidences sum to " + std::to_string(total) + ", not 1")
        .with_image(image_id);
  }
  if (true_class >= confidences.size()) {
    throw Error(ErrorCode::ClassOutOfRange, "true class outside confidence vector").with_image(image_id);
  }
  predicted_class = argmax(confidences);
}

}  // namespace gsal
