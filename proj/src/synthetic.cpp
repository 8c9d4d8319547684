#include "pap/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pap/error.hpp"
#include "pap/image_io.hpp"
#include "pap/parallel.hpp"

namespace pap {

namespace fs = std::filesystem;

std::string_view to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::kNormal: return "normal";
    case SceneKind::kSeam: return "seam";
    case SceneKind::kSmall: return "small";
  }
  return "?";
}

namespace {

// Tangent-plane inclusion test for a world direction.
bool covers(const SyntheticObject& obj, const WorldRay& dir) {
  const CameraRay c = unrotate_ray(dir, obj.lon_deg, obj.lat_deg);
  if (c.z <= 0.0) return false;
  const double tx = c.x / c.z / std::tan(deg2rad(obj.half_width_deg));
  const double ty = c.y / c.z / std::tan(deg2rad(obj.half_height_deg));
  if (obj.shape == SyntheticObject::Shape::kRectangle) return std::abs(tx) <= 1.0 && std::abs(ty) <= 1.0;
  return tx * tx + ty * ty <= 1.0;
}

template <typename Fn>
void for_each_covered(const SyntheticObject& obj, ErpDims dims, Fn&& fn) {
  // Rows within the angular radius of the object; every column is tested.
  const double radius =
      rad2deg(std::atan(std::hypot(std::tan(deg2rad(obj.half_width_deg)), std::tan(deg2rad(obj.half_height_deg)))));
  const double lat_lo = obj.lat_deg - radius - 1.0, lat_hi = obj.lat_deg + radius + 1.0;
  const int r0 = std::clamp(static_cast<int>(std::floor((lat_lo / 180.0 + 0.5) * dims.height)), 0, dims.height);
  const int r1 = std::clamp(static_cast<int>(std::ceil((lat_hi / 180.0 + 0.5) * dims.height)) + 1, 0, dims.height);
  parallel_rows(r0, r1, [&](int y) {
    for (int x = 0; x < dims.width; ++x) {
      const SphericalCoord s = spherical_from_erp_pixel(x, y, dims);
      if (covers(obj, ray_from_spherical(s))) fn(x, y);
    }
  });
}

}  // namespace

BinaryMask rasterize_object(const SyntheticObject& obj, ErpDims dims) {
  BinaryMask mask(dims.width, dims.height);
  for_each_covered(obj, dims, [&](int x, int y) { mask.set(x, y); });
  return mask;
}

Image render_scene(const SyntheticScene& scene) {
  const int W = scene.width, H = scene.height;
  Image img(W, H, 3);
  std::mt19937_64 rng(scene.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  const double p1 = phase(rng), p2 = phase(rng), p3 = phase(rng);
  parallel_rows(0, H, [&](int y) {
    const double lat = (static_cast<double>(y) / H - 0.5) * kPi;
    std::uint8_t* row = img.row(y);
    for (int x = 0; x < W; ++x) {
      const double lon = (static_cast<double>(x) / W - 0.5) * 2.0 * kPi;
      // Smooth and periodic in longitude, so the seam is invisible.
      row[3 * x + 0] = static_cast<std::uint8_t>(110 + 40 * std::sin(lon + p1) * std::cos(lat));
      row[3 * x + 1] = static_cast<std::uint8_t>(120 + 50 * std::sin(2 * lat + p2));
      row[3 * x + 2] = static_cast<std::uint8_t>(130 + 40 * std::cos(3 * lon + p3) * std::cos(lat));
    }
  });
  auto paint = [&](const SyntheticObject& obj) {
    for_each_covered(obj, {W, H}, [&](int x, int y) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = obj.color[c];
    });
  };
  for (const auto& d : scene.distractors) paint(d);
  paint(scene.object);
  return img;
}

std::vector<SyntheticScene> make_synthetic_scenes(int count, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorCode::kInvalidSpec, "scene count must be >= 1");
  struct Named {
    const char* name;
    std::array<std::uint8_t, 3> color;
  };
  static constexpr Named kTargets[] = {{"red box", {220, 30, 30}},    {"blue sign", {30, 60, 220}},
                                       {"yellow mat", {235, 215, 20}}, {"green door", {20, 170, 60}},
                                       {"white panel", {250, 250, 250}}, {"black screen", {10, 10, 10}}};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  std::vector<SyntheticScene> scenes;
  for (int i = 0; i < count; ++i) {
    SyntheticScene s;
    char id[32];
    std::snprintf(id, sizeof id, "scene_%03d", i);
    s.id = id;
    s.kind = static_cast<SceneKind>(i % 3 == 0 ? 1 : i % 3 == 1 ? 2 : 0);
    s.width = i % 2 == 0 ? 2000 : 4000;
    s.height = s.width / 2;
    s.seed = rng();

    SyntheticObject& o = s.object;
    o.shape = i % 5 == 4 ? SyntheticObject::Shape::kEllipse : SyntheticObject::Shape::kRectangle;
    const Named& t = kTargets[i % std::size(kTargets)];
    o.name = t.name;
    o.color = t.color;
    switch (s.kind) {
      case SceneKind::kSeam:
        o.lon_deg = uniform(-8.0, 8.0) + 180.0;
        o.lat_deg = uniform(-25.0, 25.0);
        o.half_width_deg = uniform(12.0, 22.0);
        o.half_height_deg = uniform(8.0, 18.0);
        break;
      case SceneKind::kSmall:
        // Well inside one middle-row cell of the 4x3 grid.
        o.lon_deg = -135.0 + 90.0 * static_cast<int>(uniform(0.0, 4.0)) + uniform(-30.0, 30.0);
        o.lat_deg = uniform(-20.0, 20.0);
        o.half_width_deg = uniform(2.5, 3.5);
        o.half_height_deg = uniform(2.5, 3.5);
        break;
      case SceneKind::kNormal:
        o.lon_deg = uniform(-160.0, 160.0);
        o.lat_deg = uniform(-30.0, 30.0);
        o.half_width_deg = uniform(8.0, 22.0);
        o.half_height_deg = uniform(6.0, 16.0);
        break;
    }
    if (o.lon_deg > 180.0) o.lon_deg -= 360.0;

    // One distractor on the far side of the sphere.
    SyntheticObject d;
    d.shape = SyntheticObject::Shape::kEllipse;
    d.lon_deg = o.lon_deg + (o.lon_deg > 0 ? -150.0 : 150.0);
    d.lat_deg = -o.lat_deg / 2;
    d.half_width_deg = 8.0;
    d.half_height_deg = 8.0;
    d.color = {128, 0, 128};
    d.name = "purple ball";
    s.distractors.push_back(d);
    scenes.push_back(std::move(s));
  }
  return scenes;
}

std::vector<AnnotationRecord> write_synthetic_dataset(const fs::path& dir, const std::vector<SyntheticScene>& scenes) {
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  fs::create_directories(dir / "masks", ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<AnnotationRecord> records;
  for (const auto& s : scenes) {
    AnnotationRecord rec;
    rec.id = s.id;
    rec.image_path = "images/" + s.id + ".png";
    rec.mask_path = "masks/" + s.id + ".png";
    rec.object_name = s.object.name;
    rec.question = "Find the " + s.object.name + " in the room.";
    rec.scene_category = "synthetic-" + std::string(to_string(s.kind));
    io::write_png(dir / rec.image_path, render_scene(s));
    io::write_mask(dir / rec.mask_path, rasterize_object(s.object, {s.width, s.height}));
    records.push_back(std::move(rec));
  }
  save_annotations(dir, records);
  return records;
}

}  // namespace pap
