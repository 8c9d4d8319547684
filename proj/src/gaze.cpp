#include "pap/gaze.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pap/error.hpp"

namespace pap {

void GazeParams::validate() const {
  if (!(margin_deg >= 0.0 && margin_deg < 45.0)) throw Error(ErrorCode::kInvalidSpec, "margin_deg must lie in [0, 45)");
  if (!(min_hfov_deg > 0.0 && min_hfov_deg <= max_hfov_deg && max_hfov_deg < 180.0)) {
    throw Error(ErrorCode::kInvalidSpec, "need 0 < min_hfov_deg <= max_hfov_deg < 180");
  }
  if (out_long_side_px < 2) throw Error(ErrorCode::kInvalidSpec, "out_long_side_px must be >= 2");
}

SphericalBox region_to_spherical_box(const CropRegion& region, ErpDims erp) {
  const auto lon = [&](double x) { return (x / erp.width - 0.5) * 2.0 * kPi; };
  const auto lat = [&](double y) { return std::clamp((y / erp.height - 0.5) * kPi, -kPi / 2, kPi / 2); };
  return {lon(region.erp_x0()), lon(region.erp_x1()), lat(region.erp_y0()), lat(region.erp_y1())};
}

namespace {

constexpr int kEdgeSamples = 64;
constexpr double kPoleLimitDeg = 89.0;
constexpr double kMaxVfovDeg = 179.0;

struct Extents {
  double half_h = 0.0;  // max angular offset from the optical axis, horizontal
  double half_v = 0.0;
  bool behind = false;
};

// Angular half-extents of the box outline seen from (yaw, pitch).
Extents box_extents(const SphericalBox& box, double yaw_deg, double pitch_deg) {
  Extents e;
  auto visit = [&](double lon, double lat) {
    const CameraRay c = unrotate_ray(ray_from_spherical({lon, lat}), yaw_deg, pitch_deg);
    if (c.z <= 1e-9) {
      e.behind = true;
      return;
    }
    e.half_h = std::max(e.half_h, std::atan2(std::abs(c.x), c.z));
    e.half_v = std::max(e.half_v, std::atan2(std::abs(c.y), c.z));
  };
  for (int i = 0; i <= kEdgeSamples; ++i) {
    const double t = static_cast<double>(i) / kEdgeSamples;
    const double lon = box.lon_lo + t * (box.lon_hi - box.lon_lo);
    const double lat = box.lat_lo + t * (box.lat_hi - box.lat_lo);
    visit(lon, box.lat_lo);
    visit(lon, box.lat_hi);
    visit(box.lon_lo, lat);
    visit(box.lon_hi, lat);
  }
  return e;
}

double wrap_degrees(double deg) {
  double r = std::remainder(deg, 360.0);
  return r == -180.0 ? 180.0 : r;
}

}  // namespace

ViewportSpec plan_gaze(const SphericalBox& box, const GazeParams& params) {
  params.validate();
  const double lon_span = std::min(box.lon_hi - box.lon_lo, 2.0 * kPi);
  const double lat_span = box.lat_hi - box.lat_lo;
  if (!(lon_span > 0.0) || !(lat_span > 0.0)) {
    throw Error(ErrorCode::kDegenerateRegion, "region has zero angular area");
  }

  const double margin = params.margin_deg;
  const double centre_pitch = rad2deg((box.lat_lo + box.lat_hi) / 2.0);

  ViewportSpec spec;
  spec.yaw_deg = wrap_degrees(rad2deg((box.lon_lo + box.lon_hi) / 2.0));
  spec.pitch_deg = centre_pitch;

  const int long_side = params.out_long_side_px;
  for (int iter = 0; iter < 8; ++iter) {
    const Extents ext = box_extents(box, spec.yaw_deg, spec.pitch_deg);
    double hfov = rad2deg(lon_span) + 2.0 * margin;
    double vfov_target = rad2deg(lat_span) + 2.0 * margin;
    if (ext.behind) {
      hfov = params.max_hfov_deg;
    } else {
      hfov = std::max(hfov, 2.0 * rad2deg(ext.half_h) + 2.0 * margin);
      vfov_target = std::max(vfov_target, 2.0 * rad2deg(ext.half_v) + 2.0 * margin);
    }
    hfov = std::clamp(hfov, params.min_hfov_deg, params.max_hfov_deg);
    vfov_target = std::min(vfov_target, kMaxVfovDeg);

    // W / H such that 2 atan((H / W) tan(hfov / 2)) >= vfov_target.
    const double aspect = std::clamp(std::tan(deg2rad(hfov) / 2.0) / std::tan(deg2rad(vfov_target) / 2.0),
                                     1.0 / 3.0, 3.0);
    spec.hfov_deg = hfov;
    if (aspect >= 1.0) {
      spec.out_width_px = long_side;
      spec.out_height_px = std::max(2, static_cast<int>(std::ceil(long_side / aspect - 1e-9)));
    } else {
      spec.out_height_px = long_side;
      spec.out_width_px = std::max(2, static_cast<int>(std::floor(long_side * aspect + 1e-9)));
    }

    const double limit = std::max(0.0, kPoleLimitDeg - spec.vfov_deg() / 2.0);
    const double pitch = std::clamp(centre_pitch, -limit, limit);
    if (pitch == spec.pitch_deg) break;
    spec.pitch_deg = pitch;
  }
  // The loop normally converges; enforce the pole bound regardless.
  const double limit = std::max(0.0, kPoleLimitDeg - spec.vfov_deg() / 2.0);
  spec.pitch_deg = std::clamp(spec.pitch_deg, -limit, limit);
  spec.validate();
  return spec;
}

GazeView gaze_extract(const Image& erp, const CropRegion& region, const GazeParams& params) {
  const ViewportSpec spec = plan_gaze(region_to_spherical_box(region, {erp.width(), erp.height()}), params);
  return {extract_viewport(erp, spec), spec};
}

}  // namespace pap
