#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace pap {

enum class Difficulty { kHard, kNormal };

std::string_view to_string(Difficulty d);
Difficulty difficulty_from_string(std::string_view s);

/// One task/mask pair. Paths are relative to the dataset directory.
struct AnnotationRecord {
  std::string id;
  std::string image_path;
  std::string question;
  std::string object_name;
  std::string mask_path;
  std::optional<std::string> scene_category;
  std::optional<Difficulty> subset;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

nlohmann::json to_json(const AnnotationRecord& r);
/// Throws DatasetFormatError naming the record id (or line) and the reason.
AnnotationRecord record_from_json(const nlohmann::json& j);

inline constexpr const char* kAnnotationsFile = "annotations.jsonl";

/// Reads `<dir>/annotations.jsonl`, one JSON object per line; blank lines
/// are skipped. Record ids must be unique.
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& dataset_dir);
void save_annotations(const std::filesystem::path& dataset_dir, const std::vector<AnnotationRecord>& records);

}  // namespace pap
