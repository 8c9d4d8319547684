#include <doctest.h>

#include "pap/error.hpp"
#include "pap/routing.hpp"
#include "support.hpp"

using namespace pap;
using test::routing_reply;
using test::ScriptedVlm;

namespace {

ErrorCode parse_error(const std::string& text) {
  try {
    parse_vlm_response(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse error");
  return ErrorCode::kIoError;
}

RoutingOutcome run(const std::vector<std::string>& replies, const RoutingConfig& cfg = {},
                   std::shared_ptr<ScriptedVlm>* out = nullptr, int w = 4000, int h = 2000) {
  auto vlm = std::make_shared<ScriptedVlm>();
  vlm->replies = replies;
  if (out) *out = vlm;
  return route(Image(w, h, 3, 128), "open the door", vlm->client(vlm), cfg, RequestContext{"img"});
}

}  // namespace

TEST_CASE("prompt template") {
  const std::string p = build_routing_prompt("open the door");
  CHECK(p.find("\"open the door\"") != std::string::npos);
  CHECK(p.find("\"TASK\"") == std::string::npos);
  CHECK(p.find("Top-Row (1, 2, 3, 4)") != std::string::npos);
  CHECK(kStrictJsonSuffix == "\n\nSTRICTLY output the JSON only.");
}

TEST_CASE("parse appendix-style replies") {
  const std::string reply =
      "#### Thinking\nThe mug is small and sits on the table {see cell 5}.\n\n#### Output\n"
      "{ \"grid_boxes\": [5], // single cell\n \"task\": \"drink\", \"object_name\": \"mug\",\n"
      " \"object_part\": \"\", \"small\": true }";
  const RoutingResult r = parse_vlm_response(reply);
  CHECK(r.grid_boxes == std::vector<int>{5});
  CHECK(r.small);
  CHECK(r.object_name == "mug");
  CHECK(r.object_part == "mug");
  CHECK(r.raw_response == reply);

  const RoutingResult fenced = parse_vlm_response("```json\n{\"grid_boxes\": [\"7\", 3, 3], \"small\": \"false\", "
                                                  "\"object_name\": \"door\", \"object_part\": \"handle\"}\n```");
  CHECK(fenced.grid_boxes == std::vector<int>{3, 7});
  CHECK_FALSE(fenced.small);
  CHECK(fenced.object_part == "handle");

  // The last object wins; braces inside strings are ignored.
  const RoutingResult last =
      parse_vlm_response("{\"grid_boxes\": [1]} then {\"grid_boxes\": [2], \"object_name\": \"a}b\"}");
  CHECK(last.grid_boxes == std::vector<int>{2});
  CHECK(last.object_name == "a}b");
}

TEST_CASE("parse errors") {
  CHECK(parse_error("{\"grid_boxes\": [0]}") == ErrorCode::kBadIndex);
  CHECK(parse_error("{\"grid_boxes\": [13]}") == ErrorCode::kBadIndex);
  CHECK(parse_error("{\"grid_boxes\": []}") == ErrorCode::kEmptyGridBoxes);
  CHECK(parse_error("I cannot see the object.") == ErrorCode::kUnparseableResponse);
  CHECK(parse_error("{\"grid_boxes\": [1,}") == ErrorCode::kUnparseableResponse);
  CHECK(parse_error("{\"small\": true}") == ErrorCode::kUnparseableResponse);
  CHECK(parse_error("{\"grid_boxes\": [\"x\"]}") == ErrorCode::kUnparseableResponse);
}

TEST_CASE("routing config") {
  RoutingConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.resolution_for_depth(0) == std::array<int, 2>{2000, 1000});
  CHECK(cfg.resolution_for_depth(1) == std::array<int, 2>{1500, 1000});
  CHECK(cfg.resolution_for_depth(5) == std::array<int, 2>{1500, 1000});
  cfg.grid = GridSpec{1, 1, 5, 50};
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("multi-cell answer terminates at depth 0") {
  std::shared_ptr<ScriptedVlm> vlm;
  const RoutingOutcome o = run({routing_reply({4, 5}, false)}, {}, &vlm);
  CHECK(o.state.depth == 0);
  CHECK(o.state.history.size() == 1);
  const FrameMap f0 = FrameMap::scaled_erp(4000, 2000, 2000, 1000);
  const std::vector<int> cells{4, 5};
  CHECK(o.target == merge_cells(cells, GridSpec{}, f0));
  CHECK(o.target.wraps_seam);
  CHECK(o.target.erp_x0() == doctest::Approx(3000));
  CHECK(o.target.erp_x1() == doctest::Approx(5000));

  // The request carries the frame and grid for the oracle.
  const auto& ext = vlm->requests.at(0).at("ext");
  CHECK(ext.at("image_id") == "img");
  CHECK(ext.at("frame").at("kind") == "erp_frame");
  CHECK(ext.at("frame").at("width") == 2000);
  CHECK(ext.at("grid").at("cols") == 4);
  CHECK(o.state.overlay.width() == 2000);
  CHECK(o.state.overlay.height() == 1000);
}

TEST_CASE("single non-small cell terminates") {
  const RoutingOutcome o = run({routing_reply({6}, false)});
  CHECK(o.state.depth == 0);
  CHECK(o.target == cell_region(6, GridSpec{}, FrameMap::scaled_erp(4000, 2000, 2000, 1000)));
}

TEST_CASE("small cell recursion composes the mapping") {
  const RoutingOutcome o = run({routing_reply({7}, true), routing_reply({3}, false)});
  CHECK(o.state.depth == 1);
  REQUIRE(o.state.history.size() == 2);
  CHECK(o.state.image.width() == 1500);
  CHECK(o.state.image.height() == 1000);
  // Cell 7 of the 2000x1000 frame is ERP x [2000, 3000), y [666, 1332); the
  // crop is resized to 1500x1000, and its cell 3 is x [750, 1125), y [0, 333).
  const double sx = 1000.0 / 1500, sy = 666.0 / 1000;
  CHECK(std::abs(o.target.erp_x0() - (2000 + 750 * sx)) < 1e-9);
  CHECK(std::abs(o.target.erp_x1() - (2000 + 1125 * sx)) < 1e-9);
  CHECK(std::abs(o.target.erp_y0() - 666) < 1e-9);
  CHECK(std::abs(o.target.erp_y1() - (666 + 333 * sy)) < 1e-9);
}

TEST_CASE("depth cap") {
  std::shared_ptr<ScriptedVlm> vlm;
  const RoutingOutcome o = run({routing_reply({7}, true)}, {}, &vlm);
  CHECK(o.state.depth == 2);
  CHECK(o.state.history.size() == 3);
  CHECK(vlm->requests.size() == 3);
  RoutingConfig shallow;
  shallow.max_depth = 0;
  CHECK(run({routing_reply({7}, true)}, shallow).state.depth == 0);
}

TEST_CASE("reprompt on unparseable replies") {
  std::shared_ptr<ScriptedVlm> vlm;
  const RoutingOutcome o = run({"no idea", routing_reply({2, 3}, false)}, {}, &vlm);
  CHECK(o.state.history.at(0).attempts == 2);
  const std::string first = vlm->requests.at(0).at("prompt");
  const std::string second = vlm->requests.at(1).at("prompt");
  CHECK(second == first + std::string(kStrictJsonSuffix));

  try {
    run({"nope"}, {}, &vlm);
    FAIL("expected UnparseableResponse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnparseableResponse);
  }
  CHECK(vlm->requests.size() == 3);

  // Range errors are not retried.
  CHECK_THROWS_AS(run({routing_reply({99}, false)}, {}, &vlm), Error);
  CHECK(vlm->requests.size() == 1);
}

TEST_CASE("routing is deterministic") {
  const RoutingOutcome a = run({routing_reply({7}, true), routing_reply({1, 2}, false)});
  const RoutingOutcome b = run({routing_reply({7}, true), routing_reply({1, 2}, false)});
  CHECK(a.state.overlay == b.state.overlay);
  CHECK(a.target == b.target);
}
