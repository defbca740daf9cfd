#include "gsal/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gsal/error.hpp"
#include "gsal/numeric.hpp"

namespace gsal {

GradientBundle::GradientBundle(std::string image_id, std::size_t num_classes,
                               std::optional<Tensor> per_class_grad_input,
                               std::optional<Tensor> layer_activations,
                               std::optional<Tensor> layer_gradients)
    : image_id_(std::move(image_id)),
      num_classes_(num_classes),
      grad_input_(std::move(per_class_grad_input)),
      activations_(std::move(layer_activations)),
      layer_gradients_(std::move(layer_gradients)) {
  auto fail = [&](const std::string& what) {
    return Error(ErrorCode::ShapeMismatch, what).with_image(image_id_);
  };
  if (grad_input_) {
    if (grad_input_->rank() != 3) throw fail("per-class grad⊙input must be K×H×W");
    if (grad_input_->dim(0) != num_classes_) throw fail("grad⊙input class count differs from K");
  }
  if (activations_ && activations_->rank() != 3) throw fail("activations must be C×h×w");
  if (layer_gradients_) {
    if (layer_gradients_->rank() != 4) throw fail("layer gradients must be K×C×h×w");
    if (layer_gradients_->dim(0) != num_classes_) throw fail("layer gradient class count differs from K");
    if (activations_) {
      for (std::size_t axis = 0; axis < 3; ++axis) {
        if (activations_->dim(axis) != layer_gradients_->dim(axis + 1)) {
          throw fail("activations and layer gradients disagree on C×h×w");
        }
      }
    }
  }
}

GradientBundle load_bundle(const ManifestEntry& entry, std::size_t num_classes) {
  auto maybe_load = [&](const std::optional<std::filesystem::path>& p) -> std::optional<Tensor> {
    if (!p) return std::nullopt;
    try {
      return load_tensor(*p);
    } catch (Error& e) {
      throw e.with_image(entry.image_id);
    }
  };
  return GradientBundle(entry.image_id, num_classes, maybe_load(entry.gradients),
                        maybe_load(entry.activations), maybe_load(entry.layer_gradients));
}

Tensor resize_bilinear(const Tensor& src, std::size_t out_h, std::size_t out_w) {
  const std::size_t in_h = src.dim(0);
  const std::size_t in_w = src.dim(1);
  if (in_h == out_h && in_w == out_w) return src;
  // Source coordinate of each output index with corners aligned.
  auto coord = [](std::size_t i, std::size_t in, std::size_t out) {
    if (out == 1 || in == 1) return 0.0;
    return static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
  };
  Tensor out({out_h, out_w});
  for (std::size_t r = 0; r < out_h; ++r) {
    const double y = coord(r, in_h, out_h);
    const auto y0 = std::min(static_cast<std::size_t>(std::floor(y)), in_h - 1);
    const std::size_t y1 = std::min(y0 + 1, in_h - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < out_w; ++c) {
      const double x = coord(c, in_w, out_w);
      const auto x0 = std::min(static_cast<std::size_t>(std::floor(x)), in_w - 1);
      const std::size_t x1 = std::min(x0 + 1, in_w - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = (1.0 - fx) * src.at(y0, x0) + fx * src.at(y0, x1);
      const double bottom = (1.0 - fx) * src.at(y1, x0) + fx * src.at(y1, x1);
      out.at(r, c) = static_cast<float>((1.0 - fy) * top + fy * bottom);
    }
  }
  return out;
}

SaliencyMap compose_gradcam(const GradientBundle& bundle, ClassIndex target_class,
                            std::size_t out_h, std::size_t out_w) {
  const auto& acts = bundle.activations();
  const auto& grads = bundle.layer_gradients();
  if (!acts || !grads || acts->empty() || grads->empty()) {
    throw Error(ErrorCode::EmptyActivation, "grad-CAM needs activations and layer gradients")
        .with_image(bundle.image_id());
  }
  if (target_class >= bundle.num_classes()) {
    throw Error(ErrorCode::ClassOutOfRange, "target class " + std::to_string(target_class) +
                                                " >= K=" + std::to_string(bundle.num_classes()))
        .with_image(bundle.image_id());
  }
  const std::size_t channels = acts->dim(0);
  const std::size_t h = acts->dim(1);
  const std::size_t w = acts->dim(2);
  if (out_h < h || out_w < w) {
    throw Error(ErrorCode::BadArgument, "grad-CAM output must not be smaller than the layer grid")
        .with_image(bundle.image_id());
  }

  const std::size_t plane = h * w;
  const auto target_grads = grads->plane(target_class);
  std::vector<double> raw(plane, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    const double weight =
        pairwise_sum(target_grads.subspan(c * plane, plane)) / static_cast<double>(plane);
    const auto act = acts->plane(c);
    for (std::size_t p = 0; p < plane; ++p) raw[p] += weight * static_cast<double>(act[p]);
  }
  Tensor map({h, w});
  for (std::size_t p = 0; p < plane; ++p) map[p] = static_cast<float>(std::max(raw[p], 0.0));
  return SaliencyMap(bundle.image_id(), SaliencyMethod::GradCAM, target_class,
                     resize_bilinear(map, out_h, out_w));
}

SaliencyMap compose_competitive(const GradientBundle& bundle, ClassIndex target_class) {
  const auto& gi = bundle.grad_input();
  if (!gi) {
    throw Error(ErrorCode::MissingField, "competitive saliency needs per-class grad⊙input")
        .with_image(bundle.image_id());
  }
  if (target_class >= bundle.num_classes()) {
    throw Error(ErrorCode::ClassOutOfRange, "target class " + std::to_string(target_class) +
                                                " >= K=" + std::to_string(bundle.num_classes()))
        .with_image(bundle.image_id());
  }
  const std::size_t k_classes = gi->dim(0);
  const std::size_t h = gi->dim(1);
  const std::size_t w = gi->dim(2);
  const auto target = gi->plane(target_class);
  Tensor out({h, w});
  for (std::size_t p = 0; p < h * w; ++p) {
    const float magnitude = std::abs(target[p]);
    bool wins = true;
    for (std::size_t k = 0; k < k_classes && wins; ++k) {
      if (k != target_class && !(magnitude > std::abs(gi->plane(k)[p]))) wins = false;
    }
    out[p] = wins ? target[p] : 0.0f;
  }
  return SaliencyMap(bundle.image_id(), SaliencyMethod::CompetitiveGradInput, target_class,
                     std::move(out));
}

double completeness_residual(const SaliencyMap& map, const PredictionRecord& record) {
  if (map.image_id != record.image_id) {
    throw Error(ErrorCode::IdMismatch,
                "saliency map '" + map.image_id + "' paired with prediction '" + record.image_id + "'");
  }
  return pairwise_sum(map.values.data()) - record.confidence();
}

PartitionSums partition_sum_check(const SaliencyMap& map, const ArtefactMask& mask,
                                  const PredictionRecord& record) {
  if (map.height() != mask.height() || map.width() != mask.width()) {
    throw Error(ErrorCode::ShapeMismatch, "saliency map and mask sizes differ").with_image(map.image_id);
  }
  if (map.image_id != record.image_id) {
    throw Error(ErrorCode::IdMismatch, "saliency map and prediction ids differ").with_image(map.image_id);
  }
  std::vector<double> inside;
  std::vector<double> outside;
  inside.reserve(mask.pixel_count());
  outside.reserve(mask.size() - mask.pixel_count());
  const auto values = map.values.data();
  for (std::size_t p = 0; p < values.size(); ++p) {
    (mask[p] ? inside : outside).push_back(values[p]);
  }
  return {record.confidence() - pairwise_sum(inside), pairwise_sum(outside)};
}

}  // namespace gsal
