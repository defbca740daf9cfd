#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gsal/aggregate.hpp"
#include "gsal/datasetops.hpp"
#include "gsal/error.hpp"
#include "gsal/metrics.hpp"

namespace gsal {

enum class TargetClass { Predicted, True };

struct AuditConfig {
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> predictions;
  SaliencyMethod method = SaliencyMethod::GradCAM;
  Aggregation aggregation = Aggregation::Mean;
  double percentile = kDefaultPeakPercentile;
  std::size_t ticks = kDefaultRraTicks;
  std::size_t min_ink_pixels = kDefaultMinInkPixels;
  std::vector<std::string> subset_classes;
  std::filesystem::path out_dir = "audit_out";
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string split = "val";  // "all" keeps every entry
  TargetClass target = TargetClass::Predicted;
  LeveneCenter levene_center = LeveneCenter::Mean;

  // Throws BadPercentile / BadArgument on out-of-range values.
  void validate() const;
};

// Either a test result or the reason it could not be computed.
struct TestOutcome {
  std::optional<TestResult> result;
  std::string error_code;
  std::string message;
};

struct CurveSummary {
  std::string name;
  std::size_t n_images = 0;
  RRACurve curve;
  TestOutcome kendall;  // τ between threshold percentile and subset accuracy
};

struct CompletenessSummary {
  std::size_t n = 0;
  double mean_residual = 0.0;
  double mean_abs_residual = 0.0;
  double max_abs_residual = 0.0;
};

struct AuditResult {
  AuditConfig config;
  std::vector<std::string> classes;
  std::size_t images = 0;
  std::vector<std::string> excluded_empty_mask;
  std::vector<ImageSaliencyStat> stats;  // manifest order, z-scored when normalized
  GlobalSaliencyReport report;
  TestOutcome levene_by_class;
  std::vector<CurveSummary> curves;  // "all", then "subset"/"rest" when requested
  CompletenessSummary completeness;
  CooccurrenceTable cooccurrence;
};

AuditResult run_audit(const AuditConfig& config);

struct OutputFile {
  std::string name;
  std::string contents;
};

std::vector<OutputFile> render_audit(const AuditResult& result);

// Writes every file or none: contents are staged to temporaries and renamed,
// and anything already written is removed if a later step fails.
void write_outputs(const std::filesystem::path& out_dir, const std::vector<OutputFile>& files);

std::string report_json(const AuditResult& result);
std::string per_image_csv(const AuditResult& result);
std::string curve_csv(const RRACurve& curve);

// Compares two report.json documents produced with the same class list and
// aggregation; throws IncompatibleReports otherwise.
std::string compare_reports(const std::string& report_a, const std::string& report_b,
                            LeveneCenter center = LeveneCenter::Mean);

std::string cooccurrence_json(const CooccurrenceTable& table);
std::string cooccurrence_csv(const CooccurrenceTable& table);
std::string plan_json(const SamplingPlan& plan, const std::vector<std::string>& classes);
std::string invariance_json(const InvarianceReport& report);

// {"error":{"code":...,"message":...,"image_id":...,"path":...}}
std::string error_json(const Error& error);

// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace gsal
