#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pap/dataset.hpp"
#include "pap/geometry.hpp"
#include "pap/image.hpp"

namespace pap {

/// A flat object lying in the plane tangent to the sphere at its centre, so
/// it looks undistorted in a viewport aimed at (lon, lat) and curved in the ERP.
struct SyntheticObject {
  enum class Shape { kRectangle, kEllipse };
  Shape shape = Shape::kRectangle;
  double lon_deg = 0.0;
  double lat_deg = 0.0;
  double half_width_deg = 10.0;  // angular half-extent along the tangent axes
  double half_height_deg = 10.0;
  std::array<std::uint8_t, 3> color{200, 40, 40};
  std::string name = "red box";
};

enum class SceneKind { kNormal, kSeam, kSmall };
std::string_view to_string(SceneKind kind);

struct SyntheticScene {
  std::string id;
  SceneKind kind = SceneKind::kNormal;
  int width = 2000;
  int height = 1000;
  SyntheticObject object;
  std::vector<SyntheticObject> distractors;
  std::uint64_t seed = 0;
};

BinaryMask rasterize_object(const SyntheticObject& obj, ErpDims dims);
Image render_scene(const SyntheticScene& scene);

/// Deterministic scene list: indices cycle through seam-split, sub-0.1%-area
/// and ordinary targets; even indices are 2000x1000, odd 4000x2000.
std::vector<SyntheticScene> make_synthetic_scenes(int count, std::uint64_t seed);

/// Renders the scenes into `<dir>/images`, `<dir>/masks` and `<dir>/annotations.jsonl`.
std::vector<AnnotationRecord> write_synthetic_dataset(const std::filesystem::path& dir,
                                                      const std::vector<SyntheticScene>& scenes);

}  // namespace pap
