#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <cmath>

#include "gsal/manifest.hpp"

namespace gsal::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  for (;;) {
    path_ = fs::temp_directory_path() /
            (tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    if (fs::create_directories(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Tensor random_tensor(std::mt19937_64& rng, std::vector<std::size_t> shape, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(dist(rng));
  return t;
}

ArtefactMask random_mask(std::mt19937_64& rng, const std::string& id, std::size_t h, std::size_t w,
                         double density) {
  std::bernoulli_distribution on(density);
  std::vector<std::uint8_t> bits(h * w);
  for (auto& b : bits) b = on(rng) ? 1 : 0;
  return ArtefactMask(id, h, w, std::move(bits));
}

std::vector<double> random_softmax(std::mt19937_64& rng, std::size_t k) {
  std::normal_distribution<double> logit(0.0, 1.5);
  std::vector<double> out(k);
  double total = 0.0;
  for (auto& v : out) {
    v = std::exp(logit(rng));
    total += v;
  }
  for (auto& v : out) v /= total;
  return out;
}

SyntheticDataset write_synthetic_dataset(const fs::path& dir, const SyntheticOptions& o) {
  std::mt19937_64 rng(o.seed);
  fs::create_directories(dir / "tensors");
  const std::size_t k = o.classes.size();
  DatasetManifest manifest;
  manifest.classes = o.classes;
  PredictionSet predictions;
  predictions.classes = o.classes;
  SyntheticDataset out;

  for (std::size_t i = 0; i < o.n_images; ++i) {
    std::ostringstream id;
    id << "img" << (i < 10 ? "0" : "") << i;
    const std::string image_id = id.str();
    const ClassIndex label = i % k;
    const fs::path base = dir / "tensors" / image_id;

    ManifestEntry e;
    e.image_id = image_id;
    e.label = label;
    e.split = "val";

    e.image = base.string() + "_image.gst";
    save_tensor(e.image, random_tensor(rng, {o.height, o.width, 3}, 0.0, 1.0));

    // Rectangular "ink" blob in a random spot.
    std::vector<std::uint8_t> bits(o.height * o.width, 0);
    const bool empty = o.empty_mask_every != 0 && (i + 1) % o.empty_mask_every == 0;
    if (!empty) {
      std::uniform_int_distribution<std::size_t> pos_r(0, o.height - 4), pos_c(0, o.width - 4),
          size(2, 4);
      const std::size_t r0 = pos_r(rng), c0 = pos_c(rng), bh = size(rng), bw = size(rng);
      for (std::size_t r = r0; r < std::min(o.height, r0 + bh); ++r) {
        for (std::size_t c = c0; c < std::min(o.width, c0 + bw); ++c) bits[r * o.width + c] = 1;
      }
    }
    e.mask = base.string() + "_mask.gst";
    save_mask(*e.mask, ArtefactMask(image_id, o.height, o.width, bits));

    if (o.write_external) {
      const fs::path p = base.string() + "_external.gst";
      save_tensor(p, random_tensor(rng, {o.height, o.width}, 0.0, 1.0));
      e.saliency["external"] = p;
    }
    if (o.write_bundles) {
      e.gradients = base.string() + "_grad_input.gst";
      save_tensor(*e.gradients, random_tensor(rng, {k, o.height, o.width}));
      e.activations = base.string() + "_acts.gst";
      save_tensor(*e.activations,
                  random_tensor(rng, {o.layer_channels, o.layer_size, o.layer_size}, 0.0, 2.0));
      e.layer_gradients = base.string() + "_layer_grads.gst";
      save_tensor(*e.layer_gradients,
                  random_tensor(rng, {k, o.layer_channels, o.layer_size, o.layer_size}));
    }
    const auto conf = random_softmax(rng, k);
    if (o.inline_confidences) e.confidences = conf;
    predictions.records.emplace_back(image_id, label, conf);
    manifest.entries.push_back(std::move(e));
    out.image_ids.push_back(image_id);
  }

  out.manifest = dir / "manifest.jsonl";
  std::ofstream(out.manifest) << format_manifest(manifest, dir);
  if (o.write_predictions_file) {
    out.predictions = dir / "predictions.jsonl";
    std::ofstream(out.predictions) << format_predictions(predictions);
  }
  return out;
}

}  // namespace gsal::testing
