// gsal: global saliency auditing from the command line.
//
//   gsal audit --manifest data/manifest.jsonl --method gradcam --out out/
//   gsal compare out_biased/report.json out_unbiased/report.json
//   gsal cooc|plan|filter|ablate --manifest ... --out DIR
//   gsal invariance --original preds.jsonl --ablated preds_ablated.jsonl

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "gsal/audit.hpp"
#include "gsal/datasetops.hpp"
#include "gsal/manifest.hpp"
#include "gsal/version.hpp"

namespace {

using namespace gsal;

std::size_t default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string file_stem_for(std::size_t index, const std::string& image_id) {
  std::string safe = image_id;
  for (auto& ch : safe) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.';
    if (!ok) ch = '_';
  }
  char prefix[16];
  std::snprintf(prefix, sizeof(prefix), "%06zu_", index);
  return prefix + safe;
}

LeveneCenter parse_center(const std::string& s) {
  return s == "median" ? LeveneCenter::Median : LeveneCenter::Mean;
}

struct AuditFlags {
  std::string manifest;
  std::string predictions;
  std::string method = "gradcam";
  std::string aggregation = "mean";
  double percentile = kDefaultPeakPercentile;
  std::size_t ticks = kDefaultRraTicks;
  std::size_t min_ink = kDefaultMinInkPixels;
  std::vector<std::string> subset;
  std::uint64_t seed = 0;
  std::string out = "audit_out";
  std::size_t threads = default_threads();
  std::string split = "val";
  std::string target = "predicted";
  std::string center = "mean";
};

int cmd_audit(const AuditFlags& f) {
  AuditConfig config;
  config.manifest = f.manifest;
  if (!f.predictions.empty()) config.predictions = f.predictions;
  config.method = parse_saliency_method(f.method);
  config.aggregation = parse_aggregation(f.aggregation);
  config.percentile = f.percentile;
  config.ticks = f.ticks;
  config.min_ink_pixels = f.min_ink;
  config.subset_classes = f.subset;
  config.seed = f.seed;
  config.out_dir = f.out;
  config.threads = f.threads;
  config.split = f.split;
  config.target = f.target == "true" ? TargetClass::True : TargetClass::Predicted;
  config.levene_center = parse_center(f.center);

  const AuditResult result = run_audit(config);
  write_outputs(config.out_dir, render_audit(result));
  std::cout << "audited " << result.stats.size() << " of " << result.images << " images ("
            << result.excluded_empty_mask.size() << " with empty masks); interclass variance "
            << format_double(result.report.interclass_variance) << ", AURRAC "
            << format_double(result.curves.front().curve.aurrac) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Global saliency: aggregate saliency over artefact masks to audit dataset bias"};
  app.set_version_flag("--version", std::string(gsal::kVersion));
  app.require_subcommand(1);

  AuditFlags audit;
  auto* audit_cmd = app.add_subcommand("audit", "Aggregate artefact saliency and write report.json, per_image.csv, rra_curve.csv");
  audit_cmd->add_option("--manifest", audit.manifest, "Dataset manifest (JSON-Lines)")->required();
  audit_cmd->add_option("--predictions", audit.predictions, "Prediction records (JSON-Lines); defaults to manifest confidences");
  audit_cmd->add_option("--method", audit.method, "Saliency method")
      ->check(CLI::IsMember({"gradcam", "competitive", "external"}));
  audit_cmd->add_option("--aggregation", audit.aggregation, "Per-image aggregation")
      ->check(CLI::IsMember({"mean", "peak"}));
  audit_cmd->add_option("--percentile", audit.percentile, "Peak aggregation percentile, in (0,100)");
  audit_cmd->add_option("--ticks", audit.ticks, "Response-rate curve ticks (>= 2)");
  audit_cmd->add_option("--min-ink-pixels", audit.min_ink, "An image is inked when its mask has more pixels than this");
  audit_cmd->add_option("--subset-classes", audit.subset, "Class names for the subset/rest curve split")->delimiter(',');
  audit_cmd->add_option("--seed", audit.seed, "Seed recorded in the report");
  audit_cmd->add_option("--out", audit.out, "Output directory");
  audit_cmd->add_option("--threads", audit.threads, "Worker threads for per-image work");
  audit_cmd->add_option("--split", audit.split, "Manifest split to audit ('all' for every entry)");
  audit_cmd->add_option("--target", audit.target, "Class the saliency is taken with respect to")
      ->check(CLI::IsMember({"predicted", "true"}));
  audit_cmd->add_option("--levene-center", audit.center, "Levene centring")
      ->check(CLI::IsMember({"mean", "median"}));

  std::string report_a, report_b, compare_out, compare_center = "mean";
  auto* compare_cmd = app.add_subcommand("compare", "Compare two audit reports");
  compare_cmd->add_option("report_a", report_a, "First report.json")->required();
  compare_cmd->add_option("report_b", report_b, "Second report.json")->required();
  compare_cmd->add_option("--out", compare_out, "Write compare.json here instead of stdout");
  compare_cmd->add_option("--levene-center", compare_center, "Levene centring")
      ->check(CLI::IsMember({"mean", "median"}));

  std::string ds_manifest, ds_out = "out";
  std::size_t ds_min_ink = kDefaultMinInkPixels;
  std::size_t ds_threads = default_threads();
  double plan_ratio = 0.5;
  std::uint64_t plan_seed = 0;
  auto add_dataset_flags = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", ds_manifest, "Dataset manifest (JSON-Lines)")->required();
    cmd->add_option("--min-ink-pixels", ds_min_ink, "An image is inked when its mask has more pixels than this");
    cmd->add_option("--out", ds_out, "Output directory");
    cmd->add_option("--threads", ds_threads, "Worker threads for mask loading");
  };
  auto* cooc_cmd = app.add_subcommand("cooc", "Per-class artefact co-occurrence table");
  add_dataset_flags(cooc_cmd);
  auto* plan_cmd = app.add_subcommand("plan", "Seeded sampling plan with P(c|ink) = P(c|no ink)");
  add_dataset_flags(plan_cmd);
  plan_cmd->add_option("--ratio", plan_ratio, "Uninked images drawn per inked image");
  plan_cmd->add_option("--seed", plan_seed, "SplitMix64 seed");
  auto* filter_cmd = app.add_subcommand("filter", "Keep only inked images");
  add_dataset_flags(filter_cmd);
  auto* ablate_cmd = app.add_subcommand("ablate", "Ink-only subset with non-artefact pixels replaced by the mean pixel");
  add_dataset_flags(ablate_cmd);

  std::string inv_original, inv_ablated, inv_out;
  auto* inv_cmd = app.add_subcommand("invariance", "Fraction of predictions unchanged by ablation");
  inv_cmd->add_option("--original", inv_original, "Prediction records on original images")->required();
  inv_cmd->add_option("--ablated", inv_ablated, "Prediction records on ablated images")->required();
  inv_cmd->add_option("--out", inv_out, "Write invariance.json here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*audit_cmd) return cmd_audit(audit);

    if (*compare_cmd) {
      const std::string doc = compare_reports(read_file(report_a), read_file(report_b),
                                              parse_center(compare_center));
      if (compare_out.empty()) {
        std::cout << doc;
      } else {
        write_outputs(compare_out, {{"compare.json", doc}});
      }
      return 0;
    }

    if (*inv_cmd) {
      const std::string doc =
          invariance_json(prediction_invariance(load_predictions(inv_original), load_predictions(inv_ablated)));
      if (inv_out.empty()) {
        std::cout << doc;
      } else {
        write_outputs(inv_out, {{"invariance.json", doc}});
      }
      return 0;
    }

    const DatasetManifest manifest = load_manifest(ds_manifest);
    const std::filesystem::path out_dir = ds_out;
    const InkCounts counts = load_ink_counts(manifest, ds_threads);

    if (*cooc_cmd) {
      const CooccurrenceTable table = cooccurrence(manifest, counts, ds_min_ink);
      write_outputs(out_dir, {{"cooccurrence.json", cooccurrence_json(table)},
                              {"cooccurrence.csv", cooccurrence_csv(table)}});
      return 0;
    }
    if (*plan_cmd) {
      const SamplingPlan plan = unbiased_plan(manifest, counts, plan_ratio, plan_seed, ds_min_ink);
      const std::filesystem::path abs_out = std::filesystem::absolute(out_dir);
      write_outputs(out_dir,
                    {{"plan.json", plan_json(plan, manifest.classes)},
                     {"manifest.jsonl", format_manifest(select(manifest, plan.selected_ids), abs_out)}});
      return 0;
    }
    if (*filter_cmd) {
      const std::filesystem::path abs_out = std::filesystem::absolute(out_dir);
      write_outputs(out_dir, {{"manifest.jsonl",
                               format_manifest(ink_only_filter(manifest, counts, ds_min_ink), abs_out)}});
      return 0;
    }
    if (*ablate_cmd) {
      DatasetManifest ablated = ink_only_filter(manifest, counts, ds_min_ink);
      const std::filesystem::path abs_out = std::filesystem::absolute(out_dir);
      std::vector<OutputFile> files;
      for (std::size_t i = 0; i < ablated.entries.size(); ++i) {
        auto& e = ablated.entries[i];
        const ArtefactMask mask = load_mask(*e.mask, e.image_id);
        Tensor image;
        try {
          image = load_tensor(e.image);
        } catch (Error& err) {
          throw err.with_image(e.image_id);
        }
        const std::string name = file_stem_for(i, e.image_id) + ".gst";
        files.push_back({name, encode_tensor(ablate(image, mask))});
        e.image = abs_out / name;
        e.saliency.clear();
        e.gradients.reset();
        e.activations.reset();
        e.layer_gradients.reset();
        e.confidences.reset();
      }
      files.push_back({"manifest.jsonl", format_manifest(ablated, abs_out)});
      write_outputs(out_dir, files);
      return 0;
    }
  } catch (const gsal::Error& e) {
    std::cerr << error_json(e) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << error_json(gsal::Error(ErrorCode::IoError, e.what())) << "\n";
    return 1;
  }
  return 0;
}
