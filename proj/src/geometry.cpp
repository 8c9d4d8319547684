#include "pap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pap/error.hpp"
#include "pap/parallel.hpp"

namespace pap {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 multiply(const Mat3& a, const Mat3& b) {
  Mat3 m{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) m[i][j] += a[i][k] * b[k][j];
  return m;
}

// Pitch about X. Sign chosen so that positive pitch tilts the boresight
// toward +Y (larger latitude, lower in the ERP image).
Mat3 rot_x(double pitch_rad) {
  const double c = std::cos(pitch_rad), s = std::sin(pitch_rad);
  return {{{1, 0, 0}, {0, c, s}, {0, -s, c}}};
}

// Yaw about Y; positive yaw moves the boresight toward +longitude.
Mat3 rot_y(double yaw_rad) {
  const double c = std::cos(yaw_rad), s = std::sin(yaw_rad);
  return {{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}};
}

Mat3 camera_to_world(double yaw_deg, double pitch_deg) {
  return multiply(rot_y(deg2rad(yaw_deg)), rot_x(deg2rad(pitch_deg)));
}

std::array<double, 3> apply(const Mat3& m, double x, double y, double z) {
  return {m[0][0] * x + m[0][1] * y + m[0][2] * z, m[1][0] * x + m[1][1] * y + m[1][2] * z,
          m[2][0] * x + m[2][1] * y + m[2][2] * z};
}

std::array<double, 3> apply_transposed(const Mat3& m, double x, double y, double z) {
  return {m[0][0] * x + m[1][0] * y + m[2][0] * z, m[0][1] * x + m[1][1] * y + m[2][1] * z,
          m[0][2] * x + m[1][2] * y + m[2][2] * z};
}

double wrap_u(double u, int width) {
  double r = std::fmod(u, static_cast<double>(width));
  if (r < 0.0) r += width;
  // fmod of a value a hair below zero can round up to exactly `width`.
  return r >= width ? 0.0 : r;
}

int wrap_index(long long i, int width) {
  long long r = i % width;
  return static_cast<int>(r < 0 ? r + width : r);
}

}  // namespace

void ViewportSpec::validate() const {
  if (!(hfov_deg > 0.0 && hfov_deg < 180.0)) {
    throw Error(ErrorCode::kInvalidSpec, "hfov must lie in (0, 180), got " + std::to_string(hfov_deg));
  }
  if (out_width_px < 2 || out_height_px < 2) {
    throw Error(ErrorCode::kInvalidSpec, "viewport must be at least 2x2");
  }
  if (!std::isfinite(yaw_deg) || !std::isfinite(pitch_deg)) {
    throw Error(ErrorCode::kInvalidSpec, "non-finite orientation");
  }
}

double ViewportSpec::vfov_deg() const {
  return rad2deg(2.0 * std::atan(out_height_px / (2.0 * focal_length(*this))));
}

double focal_length(const ViewportSpec& spec) {
  spec.validate();
  return spec.out_width_px / (2.0 * std::tan(deg2rad(spec.hfov_deg) / 2.0));
}

CameraRay pixel_to_camera_ray(double x_px, double y_px, const ViewportSpec& spec) {
  return {x_px - spec.cx(), y_px - spec.cy(), focal_length(spec)};
}

WorldRay rotate_ray(const CameraRay& ray, double yaw_deg, double pitch_deg) {
  const auto w = apply(camera_to_world(yaw_deg, pitch_deg), ray.x, ray.y, ray.z);
  return {w[0], w[1], w[2]};
}

CameraRay unrotate_ray(const WorldRay& ray, double yaw_deg, double pitch_deg) {
  const auto c = apply_transposed(camera_to_world(yaw_deg, pitch_deg), ray.x, ray.y, ray.z);
  return {c[0], c[1], c[2]};
}

SphericalCoord spherical_from_ray(const WorldRay& ray) {
  const double norm = std::sqrt(ray.x * ray.x + ray.y * ray.y + ray.z * ray.z);
  if (!(norm > 0.0)) throw Error(ErrorCode::kDegenerateRay, "zero-length ray");
  return {std::atan2(ray.x, ray.z), std::asin(std::clamp(ray.y / norm, -1.0, 1.0))};
}

WorldRay ray_from_spherical(const SphericalCoord& s) {
  const double c = std::cos(s.lat_rad);
  return {c * std::sin(s.lon_rad), std::sin(s.lat_rad), c * std::cos(s.lon_rad)};
}

ErpPoint erp_pixel_from_spherical(const SphericalCoord& s, ErpDims erp) {
  const double u = (s.lon_rad / (2.0 * kPi) + 0.5) * erp.width;
  const double v = (s.lat_rad / kPi + 0.5) * erp.height;
  return {wrap_u(u, erp.width), v};
}

SphericalCoord spherical_from_erp_pixel(double u, double v, ErpDims erp) {
  return {(u / erp.width - 0.5) * 2.0 * kPi, (v / erp.height - 0.5) * kPi};
}

ErpPoint viewport_to_erp(double x_px, double y_px, const ViewportSpec& spec, ErpDims erp) {
  const WorldRay w = rotate_ray(pixel_to_camera_ray(x_px, y_px, spec), spec.yaw_deg, spec.pitch_deg);
  return erp_pixel_from_spherical(spherical_from_ray(w), erp);
}

std::optional<ViewportPoint> erp_to_viewport(double u, double v, const ViewportSpec& spec,
                                             ErpDims erp) {
  const CameraRay c =
      unrotate_ray(ray_from_spherical(spherical_from_erp_pixel(u, v, erp)), spec.yaw_deg, spec.pitch_deg);
  if (c.z <= 0.0) return std::nullopt;
  const double f = focal_length(spec);
  return ViewportPoint{f * c.x / c.z + spec.cx(), f * c.y / c.z + spec.cy()};
}

void sample_bilinear(const Image& erp, double u, double v, std::uint8_t* out) {
  const int w = erp.width();
  const int h = erp.height();
  const int ch = erp.channels();
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const double tu = u - fu;
  const double tv = v - fv;
  const int u0 = wrap_index(static_cast<long long>(fu), w);
  const int u1 = wrap_index(static_cast<long long>(fu) + 1, w);
  const int v0 = std::clamp(static_cast<int>(fv), 0, h - 1);
  const int v1 = std::clamp(static_cast<int>(fv) + 1, 0, h - 1);
  const std::uint8_t* r0 = erp.row(v0);
  const std::uint8_t* r1 = erp.row(v1);
  for (int c = 0; c < ch; ++c) {
    const double top = (1.0 - tu) * r0[u0 * ch + c] + tu * r0[u1 * ch + c];
    const double bottom = (1.0 - tu) * r1[u0 * ch + c] + tu * r1[u1 * ch + c];
    const double value = (1.0 - tv) * top + tv * bottom;
    out[c] = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
  }
}

Image extract_viewport(const Image& erp, const ViewportSpec& spec) {
  spec.validate();
  const ErpDims dims{erp.width(), erp.height()};
  const double f = focal_length(spec);
  const Mat3 r = camera_to_world(spec.yaw_deg, spec.pitch_deg);
  Image out(spec.out_width_px, spec.out_height_px, erp.channels());
  const int ch = erp.channels();
  parallel_rows(0, spec.out_height_px, [&](int y) {
    std::uint8_t* dst = out.row(y);
    const double yc = y - spec.cy();
    for (int x = 0; x < spec.out_width_px; ++x) {
      const auto w = apply(r, x - spec.cx(), yc, f);
      const double norm = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
      const SphericalCoord s{std::atan2(w[0], w[2]), std::asin(std::clamp(w[1] / norm, -1.0, 1.0))};
      const ErpPoint p = erp_pixel_from_spherical(s, dims);
      sample_bilinear(erp, p.u, p.v, dst + x * ch);
    }
  });
  return out;
}

std::vector<SphericalCoord> frustum_outline(const ViewportSpec& spec, int samples) {
  spec.validate();
  const double x0 = -0.5, x1 = spec.out_width_px - 0.5;
  const double y0 = -0.5, y1 = spec.out_height_px - 0.5;
  const std::array<std::array<double, 2>, 4> corners{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
  const int per_edge = std::max(1, samples / 4);
  std::vector<SphericalCoord> out;
  out.reserve(static_cast<std::size_t>(per_edge) * 4);
  for (int e = 0; e < 4; ++e) {
    const auto& a = corners[e];
    const auto& b = corners[(e + 1) % 4];
    for (int i = 0; i < per_edge; ++i) {
      const double t = static_cast<double>(i) / per_edge;
      const double x = a[0] + t * (b[0] - a[0]);
      const double y = a[1] + t * (b[1] - a[1]);
      out.push_back(spherical_from_ray(rotate_ray(pixel_to_camera_ray(x, y, spec), spec.yaw_deg, spec.pitch_deg)));
    }
  }
  return out;
}

namespace {

using Vec3 = std::array<double, 3>;

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 normalized(const Vec3& a) {
  const double n = std::sqrt(dot(a, a));
  return {a[0] / n, a[1] / n, a[2] / n};
}

// Extreme values of the Y component (sine of latitude) over the minor
// great-circle arc a -> b, both unit vectors.
void arc_y_range(const Vec3& a, const Vec3& b, double& lo, double& hi) {
  lo = std::min({lo, a[1], b[1]});
  hi = std::max({hi, a[1], b[1]});
  const Vec3 n = cross(a, b);
  if (dot(n, n) < 1e-30) return;
  const Vec3 nn = normalized(n);
  // Highest point of the full circle: project +Y onto the arc's plane.
  Vec3 p{-nn[1] * nn[0], 1.0 - nn[1] * nn[1], -nn[1] * nn[2]};
  if (dot(p, p) < 1e-30) return;
  p = normalized(p);
  for (const Vec3& q : {p, Vec3{-p[0], -p[1], -p[2]}}) {
    if (dot(cross(a, q), nn) >= 0.0 && dot(cross(q, b), nn) >= 0.0) {
      lo = std::min(lo, q[1]);
      hi = std::max(hi, q[1]);
    }
  }
}

}  // namespace

ErpFootprint viewport_footprint(const ViewportSpec& spec, ErpDims erp) {
  spec.validate();
  ErpFootprint full{0, erp.height, 0, erp.width, true};

  const double f = focal_length(spec);
  const double x0 = -0.5, x1 = spec.out_width_px - 0.5;
  const double y0 = -0.5, y1 = spec.out_height_px - 0.5;

  // A pole inside (or within a few pixels of) the frustum makes longitude
  // unbounded; scan everything.
  const double pad_x = 0.02 * spec.out_width_px + 2.0;
  const double pad_y = 0.02 * spec.out_height_px + 2.0;
  for (double pole_y : {-1.0, 1.0}) {
    const CameraRay c = unrotate_ray(WorldRay{0.0, pole_y, 0.0}, spec.yaw_deg, spec.pitch_deg);
    if (c.z <= 0.0) continue;
    const double px = f * c.x / c.z + spec.cx();
    const double py = f * c.y / c.z + spec.cy();
    if (px > x0 - pad_x && px < x1 + pad_x && py > y0 - pad_y && py < y1 + pad_y) return full;
  }

  // Latitude band: exact extremes over the four great-circle edges.
  const std::array<std::array<double, 2>, 4> corners{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
  std::array<Vec3, 4> dirs{};
  for (int i = 0; i < 4; ++i) {
    const WorldRay w = rotate_ray(pixel_to_camera_ray(corners[i][0], corners[i][1], spec),
                                  spec.yaw_deg, spec.pitch_deg);
    dirs[i] = normalized({w.x, w.y, w.z});
  }
  double ylo = 1.0, yhi = -1.0;
  for (int i = 0; i < 4; ++i) arc_y_range(dirs[i], dirs[(i + 1) % 4], ylo, yhi);
  const double lat_lo = std::asin(std::clamp(ylo, -1.0, 1.0));
  const double lat_hi = std::asin(std::clamp(yhi, -1.0, 1.0));

  // Longitude: monotone along each edge, so the unwrapped outline bounds it.
  const auto outline = frustum_outline(spec, 256);
  double lon = outline.front().lon_rad;
  double lon_lo = lon, lon_hi = lon;
  double winding = 0.0;
  for (std::size_t i = 1; i <= outline.size(); ++i) {
    const double next = outline[i % outline.size()].lon_rad;
    double step = next - std::remainder(lon, 2.0 * kPi);
    step = std::remainder(step, 2.0 * kPi);
    if (std::abs(step) > kPi / 2.0) return full;
    lon += step;
    winding += step;
    lon_lo = std::min(lon_lo, lon);
    lon_hi = std::max(lon_hi, lon);
  }
  if (std::abs(winding) > kPi) return full;

  ErpFootprint fp;
  const double v_lo = (lat_lo / kPi + 0.5) * erp.height;
  const double v_hi = (lat_hi / kPi + 0.5) * erp.height;
  fp.row_begin = std::clamp(static_cast<int>(std::floor(v_lo)) - 1, 0, erp.height);
  fp.row_end = std::clamp(static_cast<int>(std::ceil(v_hi)) + 2, 0, erp.height);

  const double u_lo = (lon_lo / (2.0 * kPi) + 0.5) * erp.width;
  const double u_hi = (lon_hi / (2.0 * kPi) + 0.5) * erp.width;
  const long long c_lo = static_cast<long long>(std::floor(u_lo)) - 1;
  const long long c_hi = static_cast<long long>(std::ceil(u_hi)) + 1;
  if (c_hi - c_lo + 1 >= erp.width) {
    fp.col_begin = 0;
    fp.col_count = erp.width;
  } else {
    fp.col_begin = wrap_index(c_lo, erp.width);
    fp.col_count = static_cast<int>(c_hi - c_lo + 1);
  }
  return fp;
}

BinaryMask reproject_mask_to_erp(const BinaryMask& mask, const ViewportSpec& spec, ErpDims erp,
                                 ScanMode mode) {
  spec.validate();
  if (mask.width() != spec.out_width_px || mask.height() != spec.out_height_px) {
    throw Error(ErrorCode::kDimensionMismatch, "mask does not match viewport size");
  }
  const ErpFootprint fp = mode == ScanMode::kFull ? ErpFootprint{0, erp.height, 0, erp.width, true}
                                                  : viewport_footprint(spec, erp);
  const double f = focal_length(spec);
  const Mat3 r = camera_to_world(spec.yaw_deg, spec.pitch_deg);
  const double cx = spec.cx(), cy = spec.cy();
  const int w = spec.out_width_px, h = spec.out_height_px;

  // Column trig depends only on the column index, not on the scan window.
  std::vector<double> sin_lon(static_cast<std::size_t>(fp.col_count));
  std::vector<double> cos_lon(static_cast<std::size_t>(fp.col_count));
  for (int k = 0; k < fp.col_count; ++k) {
    const int col = wrap_index(static_cast<long long>(fp.col_begin) + k, erp.width);
    const double lon = spherical_from_erp_pixel(col, 0.0, erp).lon_rad;
    sin_lon[k] = std::sin(lon);
    cos_lon[k] = std::cos(lon);
  }

  BinaryMask out(erp.width, erp.height);
  parallel_rows(fp.row_begin, fp.row_end, [&](int row) {
    const double lat = spherical_from_erp_pixel(0.0, row, erp).lat_rad;
    const double cl = std::cos(lat), sl = std::sin(lat);
    std::uint8_t* dst = out.row(row);
    for (int k = 0; k < fp.col_count; ++k) {
      const auto c = apply_transposed(r, cl * sin_lon[k], sl, cl * cos_lon[k]);
      if (c[2] <= 0.0) continue;
      const double x = f * c[0] / c[2] + cx;
      const double y = f * c[1] / c[2] + cy;
      const double xi = std::floor(x + 0.5);
      const double yi = std::floor(y + 0.5);
      if (xi < 0.0 || yi < 0.0 || xi >= w || yi >= h) continue;
      if (mask.get(static_cast<int>(xi), static_cast<int>(yi))) {
        dst[wrap_index(static_cast<long long>(fp.col_begin) + k, erp.width)] = 1;
      }
    }
  });
  return out;
}

BinaryMask project_mask_to_viewport(const BinaryMask& erp_mask, const ViewportSpec& spec) {
  spec.validate();
  const ErpDims dims{erp_mask.width(), erp_mask.height()};
  const double f = focal_length(spec);
  const Mat3 r = camera_to_world(spec.yaw_deg, spec.pitch_deg);
  BinaryMask out(spec.out_width_px, spec.out_height_px);
  parallel_rows(0, spec.out_height_px, [&](int y) {
    std::uint8_t* dst = out.row(y);
    for (int x = 0; x < spec.out_width_px; ++x) {
      const auto w = apply(r, x - spec.cx(), y - spec.cy(), f);
      const double norm = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
      const SphericalCoord s{std::atan2(w[0], w[2]), std::asin(std::clamp(w[1] / norm, -1.0, 1.0))};
      const ErpPoint p = erp_pixel_from_spherical(s, dims);
      const int iu = wrap_index(static_cast<long long>(std::floor(p.u + 0.5)), dims.width);
      const int iv = std::clamp(static_cast<int>(std::floor(p.v + 0.5)), 0, dims.height - 1);
      dst[x] = erp_mask.get(iu, iv) ? 1 : 0;
    }
  });
  return out;
}

}  // namespace pap
