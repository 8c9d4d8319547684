#pragma once

// pap-wire/1: JSON over HTTP between the pipeline and model servers.
//
//   POST /v1/vlm/complete  {wire, model?, prompt, image_b64, ext?}      -> {text}
//   POST /v1/ovd/detect    {wire, model?, image_b64, query, ext?}       -> {boxes, points, scores}
//   POST /v1/sam/segment   {wire, model?, image_b64, box, points, ext?} -> {mask_b64}
//   GET  /healthz                                                       -> {"ok": true, ...}
//
// Images are base64 PNG. `ext` is an optional object describing the frame
// the image was cut from; oracle mocks rely on it, real models ignore it.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pap/geometry.hpp"
#include "pap/grid.hpp"

namespace pap::wire {

using json = nlohmann::json;

inline constexpr std::string_view kVersion = "pap-wire/1";
inline constexpr const char* kVlmPath = "/v1/vlm/complete";
inline constexpr const char* kOvdPath = "/v1/ovd/detect";
inline constexpr const char* kSamPath = "/v1/sam/segment";
inline constexpr const char* kHealthPath = "/healthz";

/// Geometry of the image attached to a request, relative to the source ERP.
struct FrameInfo {
  enum class Kind { kErpFrame, kViewport };
  Kind kind = Kind::kErpFrame;
  int erp_width = 0;
  int erp_height = 0;
  FrameMap map;            // kErpFrame: frame -> ERP (possibly cropped, possibly wrapping)
  ViewportSpec viewport;   // kViewport
};

struct RequestExt {
  std::string image_id;
  std::string task;
  std::optional<FrameInfo> frame;
  std::optional<GridSpec> grid;
};

struct VlmRequest {
  std::string model;
  std::string prompt;
  std::string image_b64;
  std::optional<RequestExt> ext;
};

struct VlmResponse {
  std::string text;
};

struct OvdRequest {
  std::string model;
  std::string image_b64;
  std::string query;
  std::optional<RequestExt> ext;
};

struct OvdResponse {
  std::vector<std::array<double, 4>> boxes;
  std::vector<std::array<double, 2>> points;
  std::vector<double> scores;
};

struct SamRequest {
  std::string model;
  std::string image_b64;
  std::array<double, 4> box{};
  std::vector<std::array<double, 2>> points;
  std::optional<RequestExt> ext;
};

struct SamResponse {
  std::string mask_b64;
};

json to_json(const FrameInfo& f);
json to_json(const RequestExt& e);
json to_json(const VlmRequest& r);
json to_json(const VlmResponse& r);
json to_json(const OvdRequest& r);
json to_json(const OvdResponse& r);
json to_json(const SamRequest& r);
json to_json(const SamResponse& r);
json to_json(const ViewportSpec& s);
json to_json(const GridSpec& g);

// Parsers validate the schema and throw SchemaViolation naming the field.
FrameInfo parse_frame(const json& j);
RequestExt parse_ext(const json& j);
VlmRequest parse_vlm_request(const json& j);
VlmResponse parse_vlm_response_body(const json& j);
OvdRequest parse_ovd_request(const json& j);
OvdResponse parse_ovd_response(const json& j);
SamRequest parse_sam_request(const json& j);
SamResponse parse_sam_response(const json& j);
ViewportSpec parse_viewport(const json& j);
GridSpec parse_grid(const json& j);

}  // namespace pap::wire
