#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <tuple>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "pap/backend.hpp"
#include "pap/dataset.hpp"
#include "pap/image_io.hpp"
#include "pap/metrics.hpp"

namespace pap::test {

/// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("pap_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline ModelBackendConfig backend_config(BackendKind kind, const std::string& url = "test://") {
  ModelBackendConfig cfg;
  cfg.kind = kind;
  cfg.endpoint_url = url;
  cfg.backoff_base_s = 0.0;
  return cfg;
}

/// VLM double answering each query with the next canned reply (the last one repeats).
struct ScriptedVlm {
  std::vector<std::string> replies;
  std::vector<wire::json> requests;
  std::mutex mutex;

  ModelClient client(std::shared_ptr<ScriptedVlm> self) {
    auto handler = [self](const std::string&, const std::string&, const std::string& body) {
      std::lock_guard lock(self->mutex);
      const std::size_t i = std::min(self->requests.size(), self->replies.size() - 1);
      self->requests.push_back(wire::json::parse(body));
      return HttpReply{200, wire::json{{"text", self->replies[i]}}.dump()};
    };
    return ModelClient(backend_config(BackendKind::kVlm), make_in_process_transport(handler, "scripted"));
  }
};

inline std::string routing_reply(std::vector<int> cells, bool small, const std::string& name = "mug") {
  wire::json j = {{"grid_boxes", cells}, {"task", "t"}, {"object_name", name}, {"object_part", name}, {"small", small}};
  return "#### Thinking\nLooking.\n#### Output\n```json\n" + j.dump() + "\n```";
}

/// Dataset with one record whose mask is `mask` on a flat grey image.
inline AnnotationRecord write_single_record(const std::filesystem::path& dir, const BinaryMask& mask,
                                            const std::string& id = "rec", const std::string& question = "grab it",
                                            const std::string& object = "handle") {
  std::filesystem::create_directories(dir);
  AnnotationRecord rec{id, id + ".png", question, object, id + "_mask.png", std::nullopt, std::nullopt};
  io::write_png(dir / rec.image_path, Image(mask.width(), mask.height(), 3, 90));
  io::write_mask(dir / rec.mask_path, mask);
  std::vector<AnnotationRecord> existing;
  if (std::filesystem::exists(dir / kAnnotationsFile)) existing = load_annotations(dir);
  existing.push_back(rec);
  save_annotations(dir, existing);
  return rec;
}

inline BinaryMask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  BinaryMask m(w, h);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m.set(((x % w) + w) % w, y);
  return m;
}

}  // namespace pap::test

namespace pap::test {

/// Nine 100x50 records covering every Hard/Normal criterion and its boundary.
/// Returns the expected label per record id.
inline std::map<std::string, Difficulty> write_split_fixture(const std::filesystem::path& dir) {
  const int W = 100, H = 50;  // 5000 px: 0.1% = 5 px, 30% = 1500 px
  auto count_mask = [&](int n, int x0, int y0) {
    BinaryMask m(W, H);
    for (int i = 0; i < n; ++i) m.set(x0 + i % 50, y0 + i / 50);
    return m;
  };
  BinaryMask seam(W, H);
  for (int y = 20; y < 40; ++y) seam.set(0, y), seam.set(W - 1, y);
  const std::vector<std::tuple<std::string, BinaryMask, Difficulty>> cases{
      {"large-35pct", count_mask(1750, 25, 5), Difficulty::kHard},
      {"exactly-30pct", count_mask(1500, 25, 5), Difficulty::kNormal},
      {"large-31pct", count_mask(1550, 25, 5), Difficulty::kHard},
      {"tiny-4px", count_mask(4, 40, 20), Difficulty::kHard},
      {"exactly-0.1pct", count_mask(5, 40, 20), Difficulty::kNormal},
      {"empty", BinaryMask(W, H), Difficulty::kHard},
      {"seam-thin", seam, Difficulty::kHard},
      {"left-edge-only", rect_mask(W, H, 0, 10, 10, 30), Difficulty::kNormal},
      {"centred-5pct", rect_mask(W, H, 40, 15, 60, 28), Difficulty::kNormal},
  };
  std::map<std::string, Difficulty> expected;
  for (const auto& [id, mask, label] : cases) {
    write_single_record(dir, mask, id);
    expected[id] = label;
  }
  return expected;
}

}  // namespace pap::test
