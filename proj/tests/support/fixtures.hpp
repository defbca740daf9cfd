#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gsal/types.hpp"

namespace gsal::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "gsal");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

Tensor random_tensor(std::mt19937_64& rng, std::vector<std::size_t> shape, double lo = -1.0,
                     double hi = 1.0);
ArtefactMask random_mask(std::mt19937_64& rng, const std::string& id, std::size_t h, std::size_t w,
                         double density);
std::vector<double> random_softmax(std::mt19937_64& rng, std::size_t k);

struct SyntheticOptions {
  std::size_t n_images = 20;
  std::vector<std::string> classes = {"A", "B", "C"};
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t layer_channels = 4;
  std::size_t layer_size = 8;
  std::uint64_t seed = 7;
  // Every n-th image (1-based) gets an empty mask; 0 disables.
  std::size_t empty_mask_every = 0;
  bool inline_confidences = true;
  bool write_predictions_file = true;
  bool write_external = true;
  bool write_bundles = true;
};

struct SyntheticDataset {
  std::filesystem::path manifest;
  std::filesystem::path predictions;
  std::vector<std::string> image_ids;
};

// Writes masks, images, external saliency maps, gradient bundles, a manifest
// and a prediction file under dir. All images are in split "val".
SyntheticDataset write_synthetic_dataset(const std::filesystem::path& dir,
                                         const SyntheticOptions& options);

}  // namespace gsal::testing
