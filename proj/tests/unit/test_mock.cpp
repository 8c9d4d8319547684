#include <doctest.h>

#include "pap/error.hpp"
#include "pap/mock.hpp"
#include "pap/routing.hpp"
#include "support.hpp"

using namespace pap;
using wire::json;

namespace {

wire::FrameInfo erp_frame(const FrameMap& map, int W, int H) {
  return {wire::FrameInfo::Kind::kErpFrame, W, H, map, {}};
}

wire::FrameInfo viewport_frame(const ViewportSpec& spec, int W, int H) {
  wire::FrameInfo f;
  f.kind = wire::FrameInfo::Kind::kViewport;
  f.erp_width = W;
  f.erp_height = H;
  f.viewport = spec;
  return f;
}

std::string grid_query(const std::string& id, const wire::FrameInfo& frame) {
  return wire::to_json(wire::VlmRequest{"", "p", "AAAA", wire::RequestExt{id, "grab it", frame, GridSpec{}}}).dump();
}

RoutingResult ask(const OracleMock& mock, const wire::FrameInfo& frame, const std::string& id = "rec") {
  const HttpReply r = mock.handle("POST", wire::kVlmPath, grid_query(id, frame));
  REQUIRE(r.status == 200);
  return parse_vlm_response(wire::parse_vlm_response_body(json::parse(r.body)).text);
}

}  // namespace

TEST_CASE("mock url parsing") {
  std::filesystem::path dir;
  MockOptions o = parse_mock_url("mock:///data/set?sam=rect&p=0.25&jitter=3&seed=9", dir);
  CHECK(dir == "/data/set");
  CHECK(o.sam_mode == MockOptions::SamMode::kRectangle);
  CHECK(o.grid_noise_p == 0.25);
  CHECK(o.jitter_px == 3.0);
  CHECK(o.seed == 9);
  CHECK(parse_mock_url("mock://rel/dir", dir) == MockOptions{});
  CHECK(dir == "rel/dir");
  for (const char* bad : {"http://x", "mock://", "mock://d?p=2", "mock://d?sam=fuzzy", "mock://d?colour=1",
                          "mock://d?jitter=abc"}) {
    CHECK_THROWS_AS(parse_mock_url(bad, dir), Error);
  }
}

TEST_CASE("oracle grid answers") {
  test::TempDir dir;
  // Columns 1200..1400 of a 2000x1000 ERP, rows 100..200: cell 3 at depth 0.
  test::write_single_record(dir.path(), test::rect_mask(2000, 1000, 1200, 100, 1400, 200));
  test::write_single_record(dir.path(), test::rect_mask(2000, 1000, 1900, 400, 2100, 600), "seam");
  test::write_single_record(dir.path(), test::rect_mask(2000, 1000, 1200, 400, 1240, 440), "tiny");
  const OracleMock mock(dir.path(), {});
  const FrameMap f0 = FrameMap::scaled_erp(2000, 1000, 2000, 1000);

  const RoutingResult r = ask(mock, erp_frame(f0, 2000, 1000));
  CHECK(r.grid_boxes == std::vector<int>{3});
  CHECK_FALSE(r.small);
  CHECK(r.object_name == "handle");

  CHECK(ask(mock, erp_frame(f0, 2000, 1000), "seam").grid_boxes == std::vector<int>{5, 8});

  // 1600 px is 0.08% of the frame.
  const RoutingResult tiny = ask(mock, erp_frame(f0, 2000, 1000), "tiny");
  CHECK(tiny.grid_boxes == std::vector<int>{7});
  CHECK(tiny.small);

  // Inside the recursed cell the same target fills more of the frame.
  const FrameMap f1 = cell_region(7, GridSpec{}, f0).resized_frame(1500, 1000);
  const RoutingResult deeper = ask(mock, erp_frame(f1, 2000, 1000), "tiny");
  CHECK_FALSE(deeper.small);
  CHECK(deeper.grid_boxes.size() == 1);

  // A frame that misses the target gets the centre cell.
  const FrameMap away = cell_region(1, GridSpec{}, f0).resized_frame(1500, 1000);
  CHECK(ask(mock, erp_frame(away, 2000, 1000)).grid_boxes == std::vector<int>{7});

  // Images may also be addressed by file name plus task.
  CHECK(ask(mock, erp_frame(f0, 2000, 1000), "rec.png").grid_boxes == std::vector<int>{3});
}

TEST_CASE("oracle detector and segmenter") {
  test::TempDir dir;
  test::write_single_record(dir.path(), test::rect_mask(800, 400, 390, 190, 410, 210));
  const ViewportSpec spec{0, 0, 60, 200, 200};
  const wire::FrameInfo view = viewport_frame(spec, 800, 400);
  const wire::RequestExt ext{"rec", "grab it", view, std::nullopt};
  const BinaryMask expect = project_ground_truth(test::rect_mask(800, 400, 390, 190, 410, 210), view);
  REQUIRE(expect.area() > 0);

  SUBCASE("tight box and centroid") {
    const OracleMock mock(dir.path(), {});
    const HttpReply r = mock.handle("POST", wire::kOvdPath, wire::to_json(wire::OvdRequest{"", "AAAA", "handle", ext}).dump());
    REQUIRE(r.status == 200);
    const auto resp = wire::parse_ovd_response(json::parse(r.body));
    REQUIRE(resp.boxes.size() == 1);
    int x0 = 1 << 20, x1 = -1;
    for (int y = 0; y < expect.height(); ++y)
      for (int x = 0; x < expect.width(); ++x)
        if (expect.get(x, y)) x0 = std::min(x0, x), x1 = std::max(x1, x);
    CHECK(resp.boxes[0][0] == x0 - 0.5);
    CHECK(resp.boxes[0][2] == x1 + 0.5);
    CHECK(resp.scores[0] == 1.0);
    const auto& p = resp.points.at(0);
    CHECK(expect.get(static_cast<int>(std::lround(p[0])), static_cast<int>(std::lround(p[1]))));

    const HttpReply s =
        mock.handle("POST", wire::kSamPath, wire::to_json(wire::SamRequest{"", "AAAA", resp.boxes[0], {}, ext}).dump());
    REQUIRE(s.status == 200);
    const BinaryMask m = mask_from_image(io::decode_image(io::base64_decode(wire::parse_sam_response(json::parse(s.body)).mask_b64)));
    CHECK(m == expect);
  }

  SUBCASE("rectangle segmenter fills the box") {
    MockOptions o;
    o.sam_mode = MockOptions::SamMode::kRectangle;
    const OracleMock mock(dir.path(), o);
    const std::array<double, 4> box{9.5, 19.5, 29.5, 24.5};
    const HttpReply s = mock.handle("POST", wire::kSamPath, wire::to_json(wire::SamRequest{"", "AAAA", box, {}, ext}).dump());
    REQUIRE(s.status == 200);
    const BinaryMask m = mask_from_image(io::decode_image(io::base64_decode(wire::parse_sam_response(json::parse(s.body)).mask_b64)));
    CHECK(m == test::rect_mask(200, 200, 10, 20, 30, 25));
  }

  SUBCASE("target outside the view yields no boxes") {
    const OracleMock mock(dir.path(), {});
    const wire::RequestExt behind{"rec", "grab it", viewport_frame({180, 0, 60, 200, 200}, 800, 400), std::nullopt};
    const HttpReply r =
        mock.handle("POST", wire::kOvdPath, wire::to_json(wire::OvdRequest{"", "AAAA", "handle", behind}).dump());
    CHECK(wire::parse_ovd_response(json::parse(r.body)).boxes.empty());
  }
}

TEST_CASE("status codes") {
  test::TempDir dir;
  test::write_single_record(dir.path(), test::rect_mask(200, 100, 10, 10, 20, 20));
  const OracleMock mock(dir.path(), {});
  const FrameMap f0 = FrameMap::scaled_erp(200, 100, 200, 100);
  CHECK(mock.handle("GET", wire::kHealthPath, "").status == 200);
  CHECK(json::parse(mock.handle("GET", wire::kHealthPath, "").body).at("wire") == "pap-wire/1");
  CHECK(mock.handle("GET", wire::kVlmPath, "").status == 405);
  CHECK(mock.handle("POST", "/v1/other", "{}").status == 404);
  CHECK(mock.handle("POST", wire::kVlmPath, "{not json").status == 422);
  CHECK(mock.handle("POST", wire::kVlmPath, grid_query("nobody", erp_frame(f0, 200, 100))).status == 404);
  CHECK(mock.handle("POST", wire::kVlmPath, grid_query("rec", erp_frame(f0, 400, 200))).status == 422);
  const std::string no_ext = wire::to_json(wire::VlmRequest{"", "p", "AAAA", std::nullopt}).dump();
  const HttpReply r = mock.handle("POST", wire::kVlmPath, no_ext);
  CHECK(r.status == 422);
  CHECK(json::parse(r.body).at("error") == "SchemaViolation");
}

TEST_CASE("grid noise") {
  test::TempDir dir;
  test::write_single_record(dir.path(), test::rect_mask(2000, 1000, 1200, 400, 1300, 500));
  const FrameMap f0 = FrameMap::scaled_erp(2000, 1000, 2000, 1000);
  MockOptions noisy;
  noisy.grid_noise_p = 1.0;
  noisy.seed = 3;
  const OracleMock clean(dir.path(), {}), moved(dir.path(), noisy);
  CHECK(ask(clean, erp_frame(f0, 2000, 1000)).grid_boxes == std::vector<int>{7});
  const auto cells = ask(moved, erp_frame(f0, 2000, 1000)).grid_boxes;
  REQUIRE(cells.size() == 1);
  CHECK(cells[0] != 7);
  CHECK((cells[0] == 3 || cells[0] == 6 || cells[0] == 8 || cells[0] == 11));
  // Identical requests draw identical noise.
  CHECK(ask(moved, erp_frame(f0, 2000, 1000)).grid_boxes == cells);
}

TEST_CASE("mock transports behind ModelClient") {
  test::TempDir dir;
  test::write_single_record(dir.path(), test::rect_mask(2000, 1000, 1200, 100, 1400, 200));
  const std::string url = "mock://" + dir.path().string();
  const ModelClient vlm = ModelClient::connect(test::backend_config(BackendKind::kVlm, url));
  CHECK(vlm.healthy());
  const FrameMap f0 = FrameMap::scaled_erp(2000, 1000, 2000, 1000);
  const std::string text = vlm.vlm_complete(Image(2000, 1000, 3), "p",
                                            wire::RequestExt{"rec", "grab it", erp_frame(f0, 2000, 1000), GridSpec{}});
  CHECK(parse_vlm_response(text).grid_boxes == std::vector<int>{3});

  MockServer server(dir.path(), {});
  const int port = server.start();
  const ModelClient http =
      ModelClient::connect(test::backend_config(BackendKind::kVlm, "http://127.0.0.1:" + std::to_string(port)));
  CHECK(http.vlm_complete(Image(2000, 1000, 3), "p",
                          wire::RequestExt{"rec", "grab it", erp_frame(f0, 2000, 1000), GridSpec{}}) == text);
  server.stop();
}
