#include "gsal/audit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "gsal/manifest.hpp"
#include "gsal/numeric.hpp"
#include "gsal/parallel.hpp"
#include "gsal/saliency.hpp"
#include "gsal/version.hpp"

namespace gsal {
namespace {

using nlohmann::json;

// Everything computed for one manifest entry.
struct ImageWork {
  std::optional<ImageSaliencyStat> stat;
  Moments pixels;
  double residual = 0.0;
};

std::string_view to_string(TargetClass target) {
  return target == TargetClass::Predicted ? "predicted" : "true";
}

std::string_view to_string(LeveneCenter center) {
  return center == LeveneCenter::Mean ? "mean" : "median";
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json test_json(const TestResult& r) {
  return {{"test", to_string(r.test)},
          {"statistic", number_or_null(r.statistic)},
          {"p_value", r.p_value},
          {"n", r.n}};
}

json outcome_json(const TestOutcome& o) {
  if (o.result) return test_json(*o.result);
  return {{"error", o.error_code}, {"message", o.message}};
}

template <typename Fn>
TestOutcome try_test(Fn&& fn) {
  TestOutcome out;
  try {
    out.result = fn();
  } catch (const Error& e) {
    out.error_code = std::string(to_string(e.code()));
    out.message = e.what();
  }
  return out;
}

SaliencyMap obtain_map(const ManifestEntry& entry, const AuditConfig& config,
                       std::size_t num_classes, ClassIndex target, const ArtefactMask& mask) {
  const std::string key(to_string(config.method));
  if (auto it = entry.saliency.find(key); it != entry.saliency.end()) {
    Tensor values = load_tensor(it->second);
    return SaliencyMap(entry.image_id, config.method, target, std::move(values));
  }
  auto load = [&](const std::optional<std::filesystem::path>& p) -> std::optional<Tensor> {
    if (!p) return std::nullopt;
    return load_tensor(*p);
  };
  switch (config.method) {
    case SaliencyMethod::GradCAM: {
      GradientBundle bundle(entry.image_id, num_classes, std::nullopt, load(entry.activations),
                            load(entry.layer_gradients));
      return compose_gradcam(bundle, target, mask.height(), mask.width());
    }
    case SaliencyMethod::CompetitiveGradInput: {
      GradientBundle bundle(entry.image_id, num_classes, load(entry.gradients), std::nullopt,
                            std::nullopt);
      return compose_competitive(bundle, target);
    }
    case SaliencyMethod::External:
      break;
  }
  throw Error(ErrorCode::MissingSaliency, "no '" + key + "' saliency for image '" + entry.image_id + "'");
}

std::vector<PredictionRecord> resolve_predictions(const DatasetManifest& manifest,
                                                  const std::vector<const ManifestEntry*>& entries,
                                                  const AuditConfig& config) {
  std::optional<PredictionSet> file;
  if (config.predictions) {
    file = load_predictions(*config.predictions);
    if (file->classes != manifest.classes) {
      throw Error(ErrorCode::BadArgument, "prediction file class list differs from manifest")
          .with_path(config.predictions->string());
    }
  }
  std::unordered_map<std::string, const PredictionRecord*> by_id;
  if (file) {
    for (const auto& r : file->records) by_id.emplace(r.image_id, &r);
  }
  std::vector<PredictionRecord> out;
  out.reserve(entries.size());
  for (const auto* e : entries) {
    if (file) {
      auto it = by_id.find(e->image_id);
      if (it == by_id.end()) {
        throw Error(ErrorCode::MissingPrediction, "no prediction for image '" + e->image_id + "'")
            .with_image(e->image_id);
      }
      if (it->second->true_class != e->label) {
        throw Error(ErrorCode::BadArgument, "prediction true_class disagrees with manifest label")
            .with_image(e->image_id);
      }
      out.push_back(*it->second);
    } else if (e->confidences) {
      if (e->confidences->size() != manifest.classes.size()) {
        throw Error(ErrorCode::LengthMismatch, "confidence vector length differs from class count")
            .with_image(e->image_id);
      }
      out.emplace_back(e->image_id, e->label, *e->confidences);
    } else {
      throw Error(ErrorCode::MissingPrediction, "no prediction for image '" + e->image_id + "'")
          .with_image(e->image_id);
    }
  }
  return out;
}

CurveSummary summarize_curve(std::string name, const std::vector<ImageSaliencyStat>& stats,
                             const AuditConfig& config) {
  CurveSummary s;
  s.name = std::move(name);
  s.n_images = stats.size();
  s.curve = rra_curve(stats, config.aggregation, config.ticks);
  std::vector<double> x, y;
  for (const auto& p : s.curve.points) {
    x.push_back(p.threshold_percentile);
    y.push_back(p.accuracy);
  }
  s.kendall = try_test([&] { return kendall_tau(x, y); });
  return s;
}

json config_json(const AuditConfig& c) {
  // Output directory and thread count are left out: they do not affect results.
  return {{"manifest", c.manifest.generic_string()},
          {"predictions", c.predictions ? json(c.predictions->generic_string()) : json(nullptr)},
          {"method", to_string(c.method)},
          {"aggregation", to_string(c.aggregation)},
          {"percentile", c.percentile},
          {"ticks", c.ticks},
          {"min_ink_pixels", c.min_ink_pixels},
          {"subset_classes", c.subset_classes},
          {"seed", c.seed},
          {"split", c.split},
          {"target", to_string(c.target)},
          {"levene_center", to_string(c.levene_center)}};
}

json curve_json(const CurveSummary& s) {
  json points = json::array();
  for (const auto& p : s.curve.points) {
    points.push_back({{"threshold_percentile", p.threshold_percentile},
                      {"n_images", p.n_images},
                      {"accuracy", p.accuracy}});
  }
  return {{"name", s.name},
          {"n_images", s.n_images},
          {"points", points},
          {"aurrac", s.curve.aurrac},
          {"kendall_tau", outcome_json(s.kendall)}};
}

json cooccurrence_object(const CooccurrenceTable& t) {
  json rows = json::array();
  for (std::size_t c = 0; c < t.classes.size(); ++c) {
    const auto& r = t.per_class[c];
    rows.push_back({{"class", t.classes[c]},
                    {"inked", r.inked},
                    {"uninked", r.uninked},
                    {"p_ink_given_class",
                     r.p_ink_given_class ? json(*r.p_ink_given_class) : json(nullptr)}});
  }
  return {{"min_pixels", t.min_pixels}, {"overall_p_ink", t.overall_p_ink}, {"per_class", rows}};
}

json parse_report(const std::string& text, const char* which) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadJson, std::string("report ") + which + ": " + e.what());
  }
}

}  // namespace

void AuditConfig::validate() const {
  if (!(percentile > 0.0 && percentile < 100.0)) {
    throw Error(ErrorCode::BadPercentile, "peak percentile must lie in (0, 100)");
  }
  if (ticks < 2) throw Error(ErrorCode::BadArgument, "rra ticks must be at least 2");
  if (threads == 0) throw Error(ErrorCode::BadArgument, "threads must be at least 1");
}

std::string format_double(double value) {
  if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

AuditResult run_audit(const AuditConfig& config) {
  config.validate();
  const DatasetManifest manifest = load_manifest(config.manifest);
  const std::size_t k = manifest.classes.size();

  std::vector<const ManifestEntry*> entries;
  for (const auto& e : manifest.entries) {
    if (config.split == "all" || e.split == config.split) entries.push_back(&e);
  }
  if (entries.empty()) {
    throw Error(ErrorCode::EmptyInput, "no manifest entries in split '" + config.split + "'")
        .with_path(config.manifest.string());
  }

  std::set<ClassIndex> subset;
  for (const auto& name : config.subset_classes) {
    auto idx = manifest.class_index(name);
    if (!idx) throw Error(ErrorCode::UnknownClassLabel, "subset class '" + name + "' is not in the class list");
    subset.insert(*idx);
  }

  const std::vector<PredictionRecord> predictions = resolve_predictions(manifest, entries, config);

  std::vector<ImageWork> work(entries.size());
  std::vector<std::size_t> ink(entries.size());
  parallel_for(entries.size(), config.threads, [&](std::size_t i) {
    const ManifestEntry& e = *entries[i];
    try {
      if (!e.mask) throw Error(ErrorCode::MissingMask, "manifest entry has no mask");
      const ArtefactMask mask = load_mask(*e.mask, e.image_id);
      ink[i] = mask.pixel_count();
      const PredictionRecord& record = predictions[i];
      const ClassIndex target =
          config.target == TargetClass::Predicted ? record.predicted_class : record.true_class;
      const SaliencyMap map = obtain_map(e, config, k, target, mask);
      if (map.height() != mask.height() || map.width() != mask.width()) {
        throw Error(ErrorCode::ShapeMismatch, "saliency map and mask sizes differ");
      }
      work[i].pixels = moments_of(map.values.data());
      work[i].residual = completeness_residual(map, record);
      if (mask.pixel_count() > 0) work[i].stat = image_stat(map, mask, record, config.percentile);
    } catch (Error& err) {
      if (err.image_id().empty()) err.with_image(e.image_id);
      throw;
    }
  });

  AuditResult result;
  result.config = config;
  result.classes = manifest.classes;
  result.images = entries.size();

  std::vector<std::pair<std::string, Moments>> per_image;
  std::vector<std::pair<std::string, double>> residuals;
  std::vector<ImageSaliencyStat> raw_stats;
  InkCounts counts;
  DatasetManifest audited;
  audited.classes = manifest.classes;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    per_image.emplace_back(entries[i]->image_id, work[i].pixels);
    residuals.emplace_back(entries[i]->image_id, work[i].residual);
    counts[entries[i]->image_id] = ink[i];
    audited.entries.push_back(*entries[i]);
    if (work[i].stat) {
      raw_stats.push_back(*work[i].stat);
    } else {
      result.excluded_empty_mask.push_back(entries[i]->image_id);
    }
  }
  result.cooccurrence = cooccurrence(audited, counts, config.min_ink_pixels);

  std::sort(residuals.begin(), residuals.end());
  std::vector<double> res, abs_res;
  for (const auto& [id, r] : residuals) {
    res.push_back(r);
    abs_res.push_back(std::abs(r));
  }
  result.completeness.n = res.size();
  result.completeness.mean_residual = pairwise_sum(res) / static_cast<double>(res.size());
  result.completeness.mean_abs_residual = pairwise_sum(abs_res) / static_cast<double>(res.size());
  result.completeness.max_abs_residual = *std::max_element(abs_res.begin(), abs_res.end());

  if (raw_stats.empty()) {
    throw Error(ErrorCode::EmptyInput, "every audited image has an empty artefact mask");
  }

  const Moments moments = merge_by_id(std::move(per_image));
  std::optional<Normalization> normalization;
  if (moments.population_stddev() > 0.0) {
    const ZScoreResult z = zscore_with(raw_stats, moments);
    result.stats = z.stats;
    normalization = Normalization{z.mu, z.sigma};
  } else if (config.aggregation == Aggregation::Mean) {
    throw Error(ErrorCode::DegenerateDistribution,
                "saliency pixels have zero variance; mean aggregation cannot be z-scored");
  } else {
    result.stats = raw_stats;
  }

  result.report = per_class_report(result.stats, manifest.classes, config.aggregation);
  result.report.method = config.method;
  result.report.normalization = normalization;

  result.levene_by_class = try_test([&] {
    std::vector<std::vector<double>> groups;
    for (auto& g : group_by_class(result.stats, k, config.aggregation)) {
      if (g.size() >= 2) groups.push_back(std::move(g));
    }
    return levene_test(groups, config.levene_center);
  });

  result.curves.push_back(summarize_curve("all", result.stats, config));
  if (!subset.empty()) {
    std::vector<ImageSaliencyStat> inside, outside;
    for (const auto& s : result.stats) (subset.contains(s.true_class) ? inside : outside).push_back(s);
    if (!inside.empty()) result.curves.push_back(summarize_curve("subset", inside, config));
    if (!outside.empty()) result.curves.push_back(summarize_curve("rest", outside, config));
  }
  return result;
}

std::string report_json(const AuditResult& r) {
  json per_class = json::array();
  for (const auto& [c, s] : r.report.per_class) {
    per_class.push_back({{"class", r.classes[c]},
                         {"n", s.n},
                         {"mean", s.mean},
                         {"ci_low", s.ci_low},
                         {"ci_high", s.ci_high}});
  }
  json curves = json::array();
  for (const auto& c : r.curves) curves.push_back(curve_json(c));
  json images = json::array();
  for (const auto& s : r.stats) {
    images.push_back({{"image_id", s.image_id},
                      {"true_class", r.classes[s.true_class]},
                      {"predicted_class", r.classes[s.predicted_class]},
                      {"correct", s.correct},
                      {"artefact_pixels", s.artefact_pixels},
                      {"mean_artefact", s.mean_artefact},
                      {"peak_fraction", s.peak_fraction}});
  }
  json doc = {
      {"tool", {{"name", "gsal"}, {"version", kVersion}}},
      {"config", config_json(r.config)},
      {"classes", r.classes},
      {"method", to_string(r.report.method)},
      {"aggregation", to_string(r.report.aggregation)},
      {"normalization", r.report.normalization
                            ? json{{"mu", r.report.normalization->mu},
                                   {"sigma", r.report.normalization->sigma}}
                            : json(nullptr)},
      {"counts",
       {{"images", r.images},
        {"aggregated", r.stats.size()},
        {"excluded_empty_mask", r.excluded_empty_mask.size()}}},
      {"excluded_empty_mask", r.excluded_empty_mask},
      {"per_class", per_class},
      {"interclass_variance", r.report.interclass_variance},
      {"tests", {{"levene_by_class", outcome_json(r.levene_by_class)}}},
      {"rra", curves},
      {"completeness",
       {{"n", r.completeness.n},
        {"mean_residual", r.completeness.mean_residual},
        {"mean_abs_residual", r.completeness.mean_abs_residual},
        {"max_abs_residual", r.completeness.max_abs_residual}}},
      {"cooccurrence", cooccurrence_object(r.cooccurrence)},
      {"images", images},
  };
  return doc.dump(2) + "\n";
}

std::string per_image_csv(const AuditResult& r) {
  std::ostringstream out;
  out << "image_id,true_class,predicted_class,correct,artefact_pixels,mean_artefact,peak_fraction\n";
  for (const auto& s : r.stats) {
    out << s.image_id << ',' << r.classes[s.true_class] << ',' << r.classes[s.predicted_class] << ','
        << (s.correct ? "true" : "false") << ',' << s.artefact_pixels << ','
        << format_double(s.mean_artefact) << ',' << format_double(s.peak_fraction) << '\n';
  }
  return out.str();
}

std::string curve_csv(const RRACurve& curve) {
  std::ostringstream out;
  out << "threshold_percentile,n_images,accuracy\n";
  for (const auto& p : curve.points) {
    out << format_double(p.threshold_percentile) << ',' << p.n_images << ','
        << format_double(p.accuracy) << '\n';
  }
  return out.str();
}

std::vector<OutputFile> render_audit(const AuditResult& result) {
  std::vector<OutputFile> files;
  files.push_back({"report.json", report_json(result)});
  files.push_back({"per_image.csv", per_image_csv(result)});
  for (const auto& c : result.curves) {
    const std::string name = c.name == "all" ? "rra_curve.csv" : "rra_curve_" + c.name + ".csv";
    files.push_back({name, curve_csv(c.curve)});
  }
  return files;
}

void write_outputs(const std::filesystem::path& out_dir, const std::vector<OutputFile>& files) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::IoError, "cannot create output directory: " + ec.message())
        .with_path(out_dir.string());
  }
  std::vector<fs::path> staged;
  std::vector<fs::path> committed;
  auto cleanup = [&] {
    std::error_code ignore;
    for (const auto& p : staged) fs::remove(p, ignore);
    for (const auto& p : committed) fs::remove(p, ignore);
  };
  try {
    for (const auto& f : files) {
      const fs::path tmp = out_dir / (f.name + ".partial");
      staged.push_back(tmp);
      write_file(tmp, f.contents);
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
      const fs::path dest = out_dir / files[i].name;
      fs::rename(staged[i], dest);
      committed.push_back(dest);
    }
  } catch (const fs::filesystem_error& e) {
    cleanup();
    throw Error(ErrorCode::IoError, e.what()).with_path(out_dir.string());
  } catch (...) {
    cleanup();
    throw;
  }
}

std::string compare_reports(const std::string& report_a, const std::string& report_b,
                            LeveneCenter center) {
  const json a = parse_report(report_a, "a");
  const json b = parse_report(report_b, "b");
  std::vector<std::string> classes;
  std::string aggregation;
  try {
    classes = a.at("classes").get<std::vector<std::string>>();
    if (classes != b.at("classes").get<std::vector<std::string>>()) {
      throw Error(ErrorCode::IncompatibleReports, "reports use different class lists");
    }
    aggregation = a.at("aggregation").get<std::string>();
    if (aggregation != b.at("aggregation").get<std::string>()) {
      throw Error(ErrorCode::IncompatibleReports, "reports use different aggregation modes");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IncompatibleReports, std::string("malformed report: ") + e.what());
  }
  const std::string value_key = aggregation == "mean" ? "mean_artefact" : "peak_fraction";

  auto class_means = [&](const json& doc) {
    std::map<std::string, double> out;
    for (const auto& row : doc.at("per_class")) out[row.at("class")] = row.at("mean").get<double>();
    return out;
  };
  auto image_values = [&](const json& doc) {
    std::map<std::string, double> out;
    for (const auto& row : doc.at("images")) out[row.at("image_id")] = row.at(value_key).get<double>();
    return out;
  };

  json doc;
  try {
    const auto means_a = class_means(a);
    const auto means_b = class_means(b);
    json per_class = json::array();
    std::vector<double> group_a, group_b;
    for (const auto& name : classes) {
      auto ia = means_a.find(name);
      auto ib = means_b.find(name);
      json row = {{"class", name},
                  {"a", ia != means_a.end() ? json(ia->second) : json(nullptr)},
                  {"b", ib != means_b.end() ? json(ib->second) : json(nullptr)},
                  {"delta", nullptr}};
      if (ia != means_a.end() && ib != means_b.end()) row["delta"] = ib->second - ia->second;
      if (ia != means_a.end()) group_a.push_back(ia->second);
      if (ib != means_b.end()) group_b.push_back(ib->second);
      per_class.push_back(row);
    }

    // Levene on the two sets of per-class means: does the inter-class spread differ?
    const TestOutcome levene = try_test([&] {
      const std::vector<std::vector<double>> groups = {group_a, group_b};
      return levene_test(groups, center);
    });

    const auto values_a = image_values(a);
    const auto values_b = image_values(b);
    std::vector<double> paired_a, paired_b;
    for (const auto& [id, va] : values_a) {
      if (auto it = values_b.find(id); it != values_b.end()) {
        paired_a.push_back(va);
        paired_b.push_back(it->second);
      }
    }
    json wilcoxon = {{"paired_images", paired_a.size()}};
    const TestOutcome w = try_test([&] { return wilcoxon_signed_rank(paired_a, paired_b); });
    if (w.result) {
      wilcoxon["status"] = "ok";
      wilcoxon["result"] = test_json(*w.result);
    } else {
      const bool identical = paired_a == paired_b;
      wilcoxon["status"] = identical ? "identical" : w.error_code;
      wilcoxon["message"] = w.message;
    }

    doc = {{"tool", {{"name", "gsal"}, {"version", kVersion}}},
           {"classes", classes},
           {"aggregation", aggregation},
           {"method", {{"a", a.value("method", "")}, {"b", b.value("method", "")}}},
           {"per_class", per_class},
           {"interclass_variance",
            {{"a", a.at("interclass_variance")}, {"b", b.at("interclass_variance")}}},
           {"levene_interclass", outcome_json(levene)},
           {"wilcoxon_images", wilcoxon}};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IncompatibleReports, std::string("malformed report: ") + e.what());
  }
  return doc.dump(2) + "\n";
}

std::string cooccurrence_json(const CooccurrenceTable& table) {
  json doc = cooccurrence_object(table);
  doc["tool"] = {{"name", "gsal"}, {"version", kVersion}};
  return doc.dump(2) + "\n";
}

std::string cooccurrence_csv(const CooccurrenceTable& table) {
  std::ostringstream out;
  out << "row";
  for (const auto& c : table.classes) out << ',' << c;
  out << "\np_ink_given_class";
  for (const auto& r : table.per_class) {
    out << ',' << (r.p_ink_given_class ? format_double(*r.p_ink_given_class) : std::string());
  }
  out << "\ninked";
  for (const auto& r : table.per_class) out << ',' << r.inked;
  out << "\nuninked";
  for (const auto& r : table.per_class) out << ',' << r.uninked;
  out << '\n';
  return out.str();
}

std::string plan_json(const SamplingPlan& plan, const std::vector<std::string>& classes) {
  json counts = json::array();
  for (std::size_t c = 0; c < plan.per_class_counts.size(); ++c) {
    counts.push_back({{"class", classes.at(c)},
                      {"inked", plan.per_class_counts[c].inked},
                      {"uninked", plan.per_class_counts[c].uninked}});
  }
  json doc = {{"tool", {{"name", "gsal"}, {"version", kVersion}}},
              {"rng", "splitmix64"},
              {"seed", plan.seed},
              {"ratio", plan.ratio},
              {"per_class_counts", counts},
              {"selected_ids", plan.selected_ids}};
  return doc.dump(2) + "\n";
}

std::string invariance_json(const InvarianceReport& report) {
  json changed = json::array();
  for (std::size_t c = 0; c < report.classes.size(); ++c) {
    changed.push_back({{"class", report.classes[c]}, {"count", report.changed_to[c]}});
  }
  json doc = {{"tool", {{"name", "gsal"}, {"version", kVersion}}},
              {"compared", report.compared},
              {"unchanged", report.unchanged},
              {"invariance_fraction", report.invariance_fraction},
              {"missing_in_ablated", report.missing_in_ablated},
              {"changed_to", changed}};
  return doc.dump(2) + "\n";
}

std::string error_json(const Error& error) {
  json e = {{"code", to_string(error.code())}, {"message", error.what()}};
  if (!error.image_id().empty()) e["image_id"] = error.image_id();
  if (!error.path().empty()) e["path"] = error.path();
  return json{{"error", e}}.dump();
}

}  // namespace gsal
