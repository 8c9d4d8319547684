#include <doctest.h>

#include <cmath>
#include <random>

#include "pap/error.hpp"
#include "pap/geometry.hpp"
#include "pap/parallel.hpp"

using namespace pap;

namespace {

ViewportSpec spec(double yaw, double pitch, double hfov, int w, int h) { return {yaw, pitch, hfov, w, h}; }

Image noise_erp(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  Image img(w, h, 3);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(d(rng));
  return img;
}

}  // namespace

TEST_CASE("focal length") {
  CHECK(focal_length(spec(0, 0, 90, 1000, 500)) == doctest::Approx(500.0).epsilon(1e-12));
  CHECK(focal_length(spec(0, 0, 90, 2000, 500)) == doctest::Approx(1000.0).epsilon(1e-12));
  CHECK(std::abs(focal_length(spec(0, 0, 60, 1000, 500)) - 866.0254037844386) < 1e-9);
  double prev = 1e300;
  for (double fov = 10; fov < 180; fov += 10) {
    const double f = focal_length(spec(0, 0, fov, 1000, 500));
    CHECK(f < prev);
    prev = f;
  }
}

TEST_CASE("viewport spec validation") {
  CHECK_THROWS_AS(spec(0, 0, 180, 100, 100).validate(), Error);
  CHECK_THROWS_AS(spec(0, 0, 0, 100, 100).validate(), Error);
  CHECK_THROWS_AS(spec(0, 0, 90, 1, 100).validate(), Error);
  try {
    spec(0, 0, 190, 100, 100).validate();
    FAIL("expected InvalidSpec");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidSpec);
  }
  CHECK_NOTHROW(spec(0, 0, 179.9, 2, 2).validate());
}

TEST_CASE("pixel to camera ray") {
  const auto s = spec(0, 0, 90, 101, 101);
  const CameraRay c = pixel_to_camera_ray(s.cx(), s.cy(), s);
  CHECK(c.x == 0.0);
  CHECK(c.y == 0.0);
  CHECK(c.z == doctest::Approx(50.5));

  const CameraRay r = pixel_to_camera_ray(0, 0, s);
  CHECK(r.x == doctest::Approx(-50.0));
  CHECK(r.y == doctest::Approx(-50.0));
  CHECK(r.z == doctest::Approx(50.5));

  const double f = focal_length(s);
  const CameraRay right = pixel_to_camera_ray(s.cx() + f, s.cy(), s);
  CHECK(rad2deg(std::atan2(right.x, right.z)) == doctest::Approx(45.0));
}

TEST_CASE("rotate ray") {
  const CameraRay fwd{0, 0, 1};
  const WorldRay id = rotate_ray({0.3, -0.2, 0.9}, 0, 0);
  CHECK(id.x == doctest::Approx(0.3));
  CHECK(id.y == doctest::Approx(-0.2));
  CHECK(id.z == doctest::Approx(0.9));

  CHECK(rad2deg(spherical_from_ray(rotate_ray(fwd, 90, 0)).lon_rad) == doctest::Approx(90.0));

  // R_y(37) R_x(-21) (0,0,1) = (sin37 cos21, sin(-21), cos37 cos21).
  const WorldRay w = rotate_ray(fwd, 37, -21);
  const double y = deg2rad(37), p = deg2rad(-21);
  CHECK(std::abs(w.x - std::sin(y) * std::cos(p)) < 1e-12);
  CHECK(std::abs(w.y - std::sin(p)) < 1e-12);
  CHECK(std::abs(w.z - std::cos(y) * std::cos(p)) < 1e-12);
  const SphericalCoord s = spherical_from_ray(w);
  CHECK(std::abs(rad2deg(s.lon_rad) - 37.0) < 1e-9);
  CHECK(std::abs(rad2deg(s.lat_rad) + 21.0) < 1e-9);

  const CameraRay back = unrotate_ray(w, 37, -21);
  CHECK(std::abs(back.x) < 1e-12);
  CHECK(std::abs(back.y) < 1e-12);
  CHECK(std::abs(back.z - 1.0) < 1e-12);
}

TEST_CASE("spherical from ray") {
  auto s = spherical_from_ray({0, 0, 1});
  CHECK(s.lon_rad == 0.0);
  CHECK(s.lat_rad == 0.0);
  s = spherical_from_ray({1, 0, 0});
  CHECK(s.lon_rad == doctest::Approx(kPi / 2));
  CHECK(s.lat_rad == 0.0);
  CHECK(std::atan2(0.0, 0.0) == 0.0);
  s = spherical_from_ray({0, 1, 0});
  CHECK(s.lon_rad == 0.0);
  CHECK(s.lat_rad == doctest::Approx(kPi / 2));
  // Non-unit rays are normalized.
  s = spherical_from_ray({0, 3, 3});
  CHECK(s.lat_rad == doctest::Approx(kPi / 4));
  try {
    spherical_from_ray({0, 0, 0});
    FAIL("expected DegenerateRay");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateRay);
  }
}

TEST_CASE("erp pixel from spherical") {
  const ErpDims d{2000, 1000};
  auto p = erp_pixel_from_spherical({0, 0}, d);
  CHECK(p.u == doctest::Approx(1000));
  CHECK(p.v == doctest::Approx(500));
  p = erp_pixel_from_spherical({kPi / 2, 0}, d);
  CHECK(p.u == doctest::Approx(1500));
  const double eps = 1e-6;
  const auto a = erp_pixel_from_spherical({-kPi + eps, 0}, d);
  const auto b = erp_pixel_from_spherical({kPi - eps, 0}, d);
  const double du = std::abs(std::remainder(a.u - b.u, 2000.0));
  CHECK(du <= 2 * eps * 2000 / (2 * kPi) + 1e-9);
  CHECK(a.u >= 0.0);
  CHECK(b.u < 2000.0);
  const auto s = spherical_from_erp_pixel(1500, 250, d);
  CHECK(s.lon_rad == doctest::Approx(kPi / 2));
  CHECK(s.lat_rad == doctest::Approx(-kPi / 4));
}

TEST_CASE("viewport round trip") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  const ErpDims d{4000, 2000};
  for (int i = 0; i < 500; ++i) {
    const auto s = spec(360 * u(rng) - 180, 170 * u(rng) - 85, 10 + 160 * u(rng), 640, 480);
    const double x = u(rng) * 639, y = u(rng) * 479;
    const ErpPoint e = viewport_to_erp(x, y, s, d);
    const auto back = erp_to_viewport(e.u, e.v, s, d);
    REQUIRE(back.has_value());
    CHECK(std::hypot(back->x - x, back->y - y) < 1e-6);
  }
  // Behind the camera.
  CHECK_FALSE(erp_to_viewport(0, 1000, spec(0, 0, 90, 64, 64), d).has_value());
}

TEST_CASE("extract viewport of a constant panorama is constant") {
  const Image erp(360, 180, 3, 77);
  for (const auto& s : {spec(0, 0, 90, 64, 48), spec(170, -80, 150, 40, 90), spec(-179, 89, 30, 33, 17)}) {
    const Image v = extract_viewport(erp, s);
    CHECK(v.width() == s.out_width_px);
    CHECK(v.height() == s.out_height_px);
    for (auto px : v.data()) REQUIRE(px == 77);
  }
  CHECK_THROWS_AS(extract_viewport(erp, spec(0, 0, 180, 10, 10)), Error);
}

TEST_CASE("vertical stripe at lon 0 passes through the optical centre column") {
  const int W = 720, H = 360;
  Image erp(W, H, 1, 0);
  for (int y = 0; y < H; ++y)
    for (int x = W / 2 - 2; x <= W / 2 + 2; ++x) erp.at(x, y) = 255;
  const auto s = spec(0, 0, 60, 201, 101);
  const Image v = extract_viewport(erp, s);
  for (int y = 0; y < v.height(); ++y) {
    double sum = 0, wsum = 0;
    for (int x = 0; x < v.width(); ++x) {
      sum += x * v.at(x, y);
      wsum += v.at(x, y);
    }
    REQUIRE(wsum > 0);
    CHECK(std::abs(sum / wsum - s.cx()) <= 1.0);
  }
}

TEST_CASE("extraction at yaw 180 equals yaw 0 on the half-rolled panorama") {
  const Image erp = noise_erp(400, 200, 11);
  const Image rolled = roll_columns(erp, 200);
  const Image a = extract_viewport(erp, spec(180, 12, 80, 96, 64));
  const Image b = extract_viewport(rolled, spec(0, 12, 80, 96, 64));
  for (std::size_t i = 0; i < a.data().size(); ++i) REQUIRE(std::abs(a.data()[i] - b.data()[i]) <= 1);
}

TEST_CASE("row parallelism does not change results") {
  const Image erp = noise_erp(400, 200, 5);
  const auto s = spec(33, -20, 100, 120, 90);
  set_worker_threads(1);
  const Image one = extract_viewport(erp, s);
  BinaryMask ones(120, 90, true);
  const BinaryMask m1 = reproject_mask_to_erp(ones, s, {400, 200});
  set_worker_threads(7);
  const Image many = extract_viewport(erp, s);
  const BinaryMask m7 = reproject_mask_to_erp(ones, s, {400, 200});
  set_worker_threads(0);
  CHECK(one == many);
  CHECK(m1 == m7);
}

TEST_CASE("reproject mask: zeros, ones and frustum consistency") {
  const ErpDims d{360, 180};
  const auto s = spec(30, 10, 70, 64, 48);
  CHECK(reproject_mask_to_erp(BinaryMask(64, 48), s, d).area() == 0);

  const BinaryMask erp = reproject_mask_to_erp(BinaryMask(64, 48, true), s, d);
  CHECK(erp.area() > 0);
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      const auto p = erp_to_viewport(x, y, s, d);
      const bool inside = p && std::floor(p->x + 0.5) >= 0 && std::floor(p->x + 0.5) < 64 &&
                          std::floor(p->y + 0.5) >= 0 && std::floor(p->y + 0.5) < 48;
      REQUIRE(erp.get(x, y) == inside);
    }
  }
  CHECK_THROWS_AS(reproject_mask_to_erp(BinaryMask(63, 48), s, d), Error);
}

TEST_CASE("centred disk at yaw 180 wraps the seam as one component") {
  const int n = 101;
  BinaryMask disk(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) disk.set(x, y, (x - 50) * (x - 50) + (y - 50) * (y - 50) <= 40 * 40);
  const ErpDims d{720, 360};
  const BinaryMask erp = reproject_mask_to_erp(disk, spec(180, 0, 60, n, n), d);
  CHECK(erp.any_in_column(0));
  CHECK(erp.any_in_column(d.width - 1));
  CHECK(connected_components(erp, false) == 2);
  CHECK(connected_components(erp, true) == 1);
  CHECK(connected_components(roll_columns(erp, d.width / 2), false) == 1);
}

TEST_CASE("restricted and full scans agree") {
  const ErpDims d{500, 250};
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<ViewportSpec> specs = {spec(179, 0, 50, 80, 60), spec(-180, 5, 120, 80, 60), spec(0, 84, 40, 64, 64),
                                     spec(90, -88, 100, 70, 50)};
  for (int i = 0; i < 8; ++i) specs.push_back(spec(360 * u(rng) - 180, 160 * u(rng) - 80, 20 + 140 * u(rng), 72, 54));
  for (const auto& s : specs) {
    BinaryMask m(s.out_width_px, s.out_height_px);
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) m.set(x, y, ((x / 7) + (y / 5)) % 2 == 0);
    CHECK(reproject_mask_to_erp(m, s, d, ScanMode::kRestricted) == reproject_mask_to_erp(m, s, d, ScanMode::kFull));
  }
}

TEST_CASE("footprint falls back to a full scan around the poles") {
  CHECK(viewport_footprint(spec(0, 89, 60, 64, 64), {400, 200}).full_scan);
  const auto fp = viewport_footprint(spec(0, 0, 60, 64, 64), {400, 200});
  CHECK_FALSE(fp.full_scan);
  CHECK(fp.col_count < 400);
  CHECK(fp.row_begin > 0);
  CHECK(fp.row_end < 200);
}

TEST_CASE("forward projection of an ERP mask") {
  const ErpDims d{360, 180};
  BinaryMask erp(d.width, d.height, true);
  const BinaryMask v = project_mask_to_viewport(erp, spec(10, 20, 90, 40, 30));
  CHECK(v.area() == 40u * 30u);
}
