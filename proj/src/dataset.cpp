#include "pap/dataset.hpp"

#include <fstream>
#include <set>

#include "pap/error.hpp"

namespace pap {

std::string_view to_string(Difficulty d) { return d == Difficulty::kHard ? "hard" : "normal"; }

Difficulty difficulty_from_string(std::string_view s) {
  if (s == "hard") return Difficulty::kHard;
  if (s == "normal") return Difficulty::kNormal;
  throw Error(ErrorCode::kDatasetFormatError, "subset must be 'hard' or 'normal', got '" + std::string(s) + "'");
}

nlohmann::json to_json(const AnnotationRecord& r) {
  nlohmann::json j{{"id", r.id},
                   {"image_path", r.image_path},
                   {"question", r.question},
                   {"object_name", r.object_name},
                   {"mask_path", r.mask_path}};
  if (r.scene_category) j["scene_category"] = *r.scene_category;
  if (r.subset) j["subset"] = std::string(to_string(*r.subset));
  return j;
}

AnnotationRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kDatasetFormatError, "record is not a JSON object");
  const std::string id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : "<no id>";
  auto fail = [&id](const std::string& why) {
    throw Error(ErrorCode::kDatasetFormatError, "record " + id + ": " + why);
  };
  auto str = [&](const char* name, bool required) -> std::string {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) {
      if (required) fail(std::string("missing '") + name + "'");
      return {};
    }
    if (!it->is_string()) fail(std::string("'") + name + "' must be a string");
    return it->get<std::string>();
  };

  AnnotationRecord r;
  r.id = str("id", true);
  r.image_path = str("image_path", true);
  r.question = str("question", true);
  r.object_name = str("object_name", false);
  r.mask_path = str("mask_path", true);
  if (r.id.empty()) fail("empty id");
  if (r.question.empty()) fail("empty question");
  if (j.contains("scene_category") && !j["scene_category"].is_null()) r.scene_category = str("scene_category", false);
  if (j.contains("subset") && !j["subset"].is_null()) {
    try {
      r.subset = difficulty_from_string(str("subset", false));
    } catch (const Error&) {
      fail("bad subset");
    }
  }
  return r;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& dataset_dir) {
  const auto path = dataset_dir / kAnnotationsFile;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kDatasetFormatError, "cannot open " + path.string());
  std::vector<AnnotationRecord> out;
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kDatasetFormatError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    AnnotationRecord r = record_from_json(j);
    if (!ids.insert(r.id).second) {
      throw Error(ErrorCode::kDatasetFormatError, "record " + r.id + ": duplicate id");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void save_annotations(const std::filesystem::path& dataset_dir, const std::vector<AnnotationRecord>& records) {
  std::filesystem::create_directories(dataset_dir);
  std::ofstream out(dataset_dir / kAnnotationsFile);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write annotations in " + dataset_dir.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

}  // namespace pap
