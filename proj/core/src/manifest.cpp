#include "gsal/manifest.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "gsal/error.hpp"

namespace gsal {
namespace {

using nlohmann::json;

std::vector<std::pair<std::size_t, json>> parse_lines(std::string_view text) {
  std::vector<std::pair<std::size_t, json>> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    try {
      out.emplace_back(line_no, json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BadJson, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (end == text.size()) break;
  }
  return out;
}

const json& require(const json& obj, const char* key, std::size_t line_no) {
  if (!obj.is_object() || !obj.contains(key) || obj[key].is_null()) {
    throw Error(ErrorCode::MissingField,
                "line " + std::to_string(line_no) + ": missing field '" + key + "'");
  }
  return obj[key];
}

std::vector<std::string> parse_class_header(const std::vector<std::pair<std::size_t, json>>& lines) {
  if (lines.empty()) throw Error(ErrorCode::MissingField, "missing {\"classes\": [...]} header line");
  const auto& [line_no, header] = lines.front();
  std::vector<std::string> classes;
  try {
    classes = require(header, "classes", line_no).get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadJson, std::string("classes header: ") + e.what());
  }
  if (classes.empty()) throw Error(ErrorCode::EmptyInput, "class list is empty");
  std::unordered_set<std::string> seen;
  for (const auto& c : classes) {
    if (!seen.insert(c).second) throw Error(ErrorCode::BadArgument, "duplicate class name '" + c + "'");
  }
  return classes;
}

ClassIndex lookup_class(const std::vector<std::string>& classes, const std::string& label,
                        const std::string& image_id) {
  auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) {
    throw Error(ErrorCode::UnknownClassLabel, "label '" + label + "' is not in the class list")
        .with_image(image_id);
  }
  return static_cast<ClassIndex>(it - classes.begin());
}

std::optional<std::filesystem::path> optional_path(const json& obj, const char* key,
                                                   const std::filesystem::path& base) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return base / obj[key].get<std::string>();
}

std::string path_string(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (!base.empty()) {
    auto rel = p.lexically_relative(base);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  }
  return p.generic_string();
}

}  // namespace

std::optional<ClassIndex> DatasetManifest::class_index(std::string_view name) const {
  auto it = std::find(classes.begin(), classes.end(), name);
  if (it == classes.end()) return std::nullopt;
  return static_cast<ClassIndex>(it - classes.begin());
}

const ManifestEntry* DatasetManifest::find(std::string_view image_id) const {
  auto it = std::find_if(entries.begin(), entries.end(),
                         [&](const ManifestEntry& e) { return e.image_id == image_id; });
  return it == entries.end() ? nullptr : &*it;
}

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  const auto lines = parse_lines(text);
  DatasetManifest manifest;
  manifest.classes = parse_class_header(lines);

  std::unordered_set<std::string> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [line_no, obj] = lines[i];
    ManifestEntry entry;
    try {
      entry.image_id = require(obj, "image_id", line_no).get<std::string>();
      const auto label = require(obj, "label", line_no).get<std::string>();
      entry.label = lookup_class(manifest.classes, label, entry.image_id);
      entry.image = base_dir / require(obj, "image", line_no).get<std::string>();
      entry.split = require(obj, "split", line_no).get<std::string>();
      entry.mask = optional_path(obj, "mask", base_dir);
      entry.gradients = optional_path(obj, "gradients", base_dir);
      entry.activations = optional_path(obj, "activations", base_dir);
      entry.layer_gradients = optional_path(obj, "layer_gradients", base_dir);
      if (obj.contains("saliency") && !obj["saliency"].is_null()) {
        for (const auto& [method, path] : obj["saliency"].items()) {
          entry.saliency.emplace(method, base_dir / path.get<std::string>());
        }
      }
      if (obj.contains("confidences") && !obj["confidences"].is_null()) {
        entry.confidences = obj["confidences"].get<std::vector<double>>();
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BadJson, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(entry.image_id).second) {
      throw Error(ErrorCode::DuplicateImageId, "image_id '" + entry.image_id + "' appears twice")
          .with_image(entry.image_id);
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_manifest(text, std::filesystem::absolute(path).lexically_normal().parent_path());
  } catch (Error& e) {
    throw e.with_path(path.string());
  }
}

std::string format_manifest(const DatasetManifest& manifest, const std::filesystem::path& base_dir) {
  std::ostringstream out;
  out << json{{"classes", manifest.classes}}.dump() << '\n';
  for (const auto& e : manifest.entries) {
    json obj;
    obj["image_id"] = e.image_id;
    obj["label"] = manifest.classes.at(e.label);
    obj["image"] = path_string(e.image, base_dir);
    obj["mask"] = e.mask ? json(path_string(*e.mask, base_dir)) : json(nullptr);
    json sal = json::object();
    for (const auto& [method, path] : e.saliency) sal[method] = path_string(path, base_dir);
    obj["saliency"] = sal;
    obj["gradients"] = e.gradients ? json(path_string(*e.gradients, base_dir)) : json(nullptr);
    obj["activations"] = e.activations ? json(path_string(*e.activations, base_dir)) : json(nullptr);
    if (e.layer_gradients) obj["layer_gradients"] = path_string(*e.layer_gradients, base_dir);
    obj["split"] = e.split;
    if (e.confidences) obj["confidences"] = *e.confidences;
    out << obj.dump() << '\n';
  }
  return out.str();
}

const PredictionRecord* PredictionSet::find(std::string_view image_id) const {
  auto it = std::find_if(records.begin(), records.end(),
                         [&](const PredictionRecord& r) { return r.image_id == image_id; });
  return it == records.end() ? nullptr : &*it;
}

namespace {

// Class fields in prediction records may be a name or a 0-based index.
ClassIndex class_field(const std::vector<std::string>& classes, const json& value, const std::string& id) {
  if (value.is_number_integer()) {
    const auto index = value.get<long long>();
    if (index < 0 || static_cast<std::size_t>(index) >= classes.size()) {
      throw Error(ErrorCode::ClassOutOfRange, "class index " + std::to_string(index) + " out of range")
          .with_image(id);
    }
    return static_cast<ClassIndex>(index);
  }
  return lookup_class(classes, value.get<std::string>(), id);
}

}  // namespace

PredictionSet parse_predictions(std::string_view text) {
  const auto lines = parse_lines(text);
  PredictionSet set;
  set.classes = parse_class_header(lines);
  std::unordered_set<std::string> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [line_no, obj] = lines[i];
    std::string id;
    ClassIndex truth = 0;
    std::vector<double> conf;
    std::optional<ClassIndex> claimed;
    try {
      id = require(obj, "image_id", line_no).get<std::string>();
      truth = class_field(set.classes, require(obj, "true_class", line_no), id);
      conf = require(obj, "confidences", line_no).get<std::vector<double>>();
      if (obj.contains("predicted_class") && !obj["predicted_class"].is_null()) {
        claimed = class_field(set.classes, obj["predicted_class"], id);
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BadJson, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (conf.size() != set.classes.size()) {
      throw Error(ErrorCode::LengthMismatch, "confidence vector length differs from class count")
          .with_image(id);
    }
    if (!ids.insert(id).second) {
      throw Error(ErrorCode::DuplicateImageId, "image_id '" + id + "' appears twice").with_image(id);
    }
    PredictionRecord record(id, truth, std::move(conf));
    if (claimed && *claimed != record.predicted_class) {
      throw Error(ErrorCode::BadArgument, "predicted_class disagrees with argmax of confidences")
          .with_image(id);
    }
    set.records.push_back(std::move(record));
  }
  return set;
}

PredictionSet load_predictions(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_predictions(text);
  } catch (Error& e) {
    throw e.with_path(path.string());
  }
}

std::string format_predictions(const PredictionSet& predictions) {
  std::ostringstream out;
  out << json{{"classes", predictions.classes}}.dump() << '\n';
  for (const auto& r : predictions.records) {
    json obj;
    obj["image_id"] = r.image_id;
    obj["true_class"] = predictions.classes.at(r.true_class);
    obj["predicted_class"] = predictions.classes.at(r.predicted_class);
    obj["confidences"] = r.confidences;
    out << obj.dump() << '\n';
  }
  return out.str();
}

}  // namespace gsal
