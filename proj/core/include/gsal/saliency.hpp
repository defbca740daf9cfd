#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "gsal/manifest.hpp"
#include "gsal/tensor.hpp"
#include "gsal/types.hpp"

namespace gsal {

// Raw model tensors exported for one image. Any of the three arrays may be
// absent; each composer checks for the ones it needs.
class GradientBundle {
 public:
  GradientBundle(std::string image_id, std::size_t num_classes,
                 std::optional<Tensor> per_class_grad_input,
                 std::optional<Tensor> layer_activations,
                 std::optional<Tensor> layer_gradients);

  const std::string& image_id() const noexcept { return image_id_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  // K×H×W
  const std::optional<Tensor>& grad_input() const noexcept { return grad_input_; }
  // C×h×w
  const std::optional<Tensor>& activations() const noexcept { return activations_; }
  // K×C×h×w
  const std::optional<Tensor>& layer_gradients() const noexcept { return layer_gradients_; }

 private:
  std::string image_id_;
  std::size_t num_classes_;
  std::optional<Tensor> grad_input_;
  std::optional<Tensor> activations_;
  std::optional<Tensor> layer_gradients_;
};

GradientBundle load_bundle(const ManifestEntry& entry, std::size_t num_classes);

// Grad-CAM: filter weight = spatial mean of the target class's layer gradient,
// map = ReLU(Σ_c weight_c · activation_c), then corner-aligned bilinear
// upsampling to out_h × out_w (which must be at least h × w).
SaliencyMap compose_gradcam(const GradientBundle& bundle, ClassIndex target_class,
                            std::size_t out_h, std::size_t out_w);

// Competitive gradient⊙input: keep the target class's signed value at pixels
// where its magnitude strictly exceeds every other class's, else zero.
SaliencyMap compose_competitive(const GradientBundle& bundle, ClassIndex target_class);

// Corner-aligned bilinear resampling of a rank-2 tensor.
Tensor resize_bilinear(const Tensor& src, std::size_t out_h, std::size_t out_w);

// Σ map − max(confidences). Zero for a map satisfying completeness.
double completeness_residual(const SaliencyMap& map, const PredictionRecord& record);

struct PartitionSums {
  double lhs;  // confidence − Σ over artefact pixels
  double rhs;  // Σ over non-artefact pixels
};

PartitionSums partition_sum_check(const SaliencyMap& map, const ArtefactMask& mask,
                                  const PredictionRecord& record);

}  // namespace gsal
