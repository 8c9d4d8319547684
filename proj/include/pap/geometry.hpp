#pragma once

// Equirectangular <-> perspective mapping.
//
// Conventions (fixed, relied upon by every other module):
//   * A continuous pixel coordinate x names the centre of pixel x. The
//     optical centre of a W x H viewport is ((W-1)/2, (H-1)/2).
//   * Camera frame: +Z boresight, +X image right, +Y image down.
//   * World ray -> sphere: lon = atan2(X, Z), lat = asin(Y / |ray|). lat grows
//     toward larger ERP row indices, so positive pitch looks "down" the image.
//   * ERP pixel coordinates: U = (lon / 2pi + 0.5) W, V = (lat / pi + 0.5) H.
//     U is periodic in W; V is clamped when sampling.

#include <array>
#include <optional>
#include <vector>

#include "pap/image.hpp"

namespace pap {

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double deg) noexcept { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) noexcept { return rad * 180.0 / kPi; }

struct ErpDims {
  int width = 0;
  int height = 0;
};

struct ViewportSpec {
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
  double hfov_deg = 90.0;
  int out_width_px = 0;
  int out_height_px = 0;

  /// Throws InvalidSpec unless 0 < hfov < 180 and both sides are >= 2.
  void validate() const;
  double cx() const noexcept { return (out_width_px - 1) / 2.0; }
  double cy() const noexcept { return (out_height_px - 1) / 2.0; }
  double vfov_deg() const;

  friend bool operator==(const ViewportSpec&, const ViewportSpec&) = default;
};

struct CameraRay {
  double x = 0.0, y = 0.0, z = 0.0;
};

struct WorldRay {
  double x = 0.0, y = 0.0, z = 0.0;
};

struct SphericalCoord {
  double lon_rad = 0.0;
  double lat_rad = 0.0;
};

struct ErpPoint {
  double u = 0.0;
  double v = 0.0;
};

struct ViewportPoint {
  double x = 0.0;
  double y = 0.0;
};

double focal_length(const ViewportSpec& spec);

CameraRay pixel_to_camera_ray(double x_px, double y_px, const ViewportSpec& spec);

/// R_y(yaw) * R_x(pitch) * ray.
WorldRay rotate_ray(const CameraRay& ray, double yaw_deg, double pitch_deg);
/// Inverse of rotate_ray: R_x(pitch)^T * R_y(yaw)^T * ray.
CameraRay unrotate_ray(const WorldRay& ray, double yaw_deg, double pitch_deg);

/// Throws DegenerateRay for a zero-length ray.
SphericalCoord spherical_from_ray(const WorldRay& ray);
/// Unit world ray pointing at `s`.
WorldRay ray_from_spherical(const SphericalCoord& s);

/// U is reduced into [0, W).
ErpPoint erp_pixel_from_spherical(const SphericalCoord& s, ErpDims erp);
/// Linear inverse of erp_pixel_from_spherical (no wrapping applied).
SphericalCoord spherical_from_erp_pixel(double u, double v, ErpDims erp);

/// Full forward chain for one viewport pixel.
ErpPoint viewport_to_erp(double x_px, double y_px, const ViewportSpec& spec, ErpDims erp);
/// Inverse chain; nullopt when the direction is behind the camera (Z_c <= 0).
std::optional<ViewportPoint> erp_to_viewport(double u, double v, const ViewportSpec& spec,
                                             ErpDims erp);

/// Bilinear sample with horizontal wrap and vertical clamp.
void sample_bilinear(const Image& erp, double u, double v, std::uint8_t* out);

/// Dense rectilinear view of the panorama. Row-parallel; output does not
/// depend on the worker count.
Image extract_viewport(const Image& erp, const ViewportSpec& spec);

/// ERP rows [row_begin, row_end) and a column window [col_begin, col_begin + col_count)
/// taken modulo the ERP width.
struct ErpFootprint {
  int row_begin = 0;
  int row_end = 0;
  int col_begin = 0;
  int col_count = 0;
  bool full_scan = false;
};

/// Conservative ERP window containing every pixel whose direction lands inside
/// the viewport frustum. Falls back to a full scan when the frustum contains a pole.
ErpFootprint viewport_footprint(const ViewportSpec& spec, ErpDims erp);

/// Spherical outline of the viewport rectangle, `samples` points in total.
std::vector<SphericalCoord> frustum_outline(const ViewportSpec& spec, int samples = 64);

enum class ScanMode { kRestricted, kFull };

/// Back-projects a viewport-frame mask into the ERP frame using
/// nearest-neighbour lookup per ERP pixel centre.
BinaryMask reproject_mask_to_erp(const BinaryMask& mask, const ViewportSpec& spec, ErpDims erp,
                                 ScanMode mode = ScanMode::kRestricted);

/// Forward nearest-neighbour projection of an ERP mask into a viewport frame.
BinaryMask project_mask_to_viewport(const BinaryMask& erp_mask, const ViewportSpec& spec);

}  // namespace pap
