#include "pap/wire.hpp"

#include "pap/error.hpp"

namespace pap::wire {

namespace {

[[noreturn]] void violation(const std::string& what) { throw Error(ErrorCode::kSchemaViolation, what); }

const json& field(const json& j, const char* name) {
  if (!j.is_object()) violation("expected an object");
  auto it = j.find(name);
  if (it == j.end()) violation(std::string("missing field '") + name + "'");
  return *it;
}

std::string get_string(const json& j, const char* name, bool allow_empty = true) {
  const json& v = field(j, name);
  if (!v.is_string()) violation(std::string("field '") + name + "' must be a string");
  std::string s = v.get<std::string>();
  if (!allow_empty && s.empty()) violation(std::string("field '") + name + "' must be non-empty");
  return s;
}

std::string get_optional_string(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) violation(std::string("field '") + name + "' must be a string");
  return it->get<std::string>();
}

double get_number(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number()) violation(std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

int get_int(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_integer()) violation(std::string("field '") + name + "' must be an integer");
  return v.get<int>();
}

template <std::size_t N>
std::array<double, N> get_tuple(const json& v, const char* name) {
  if (!v.is_array() || v.size() != N) {
    violation(std::string("field '") + name + "' must be an array of " + std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number()) violation(std::string("field '") + name + "' must contain numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

template <std::size_t N>
std::vector<std::array<double, N>> get_tuple_list(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_array()) violation(std::string("field '") + name + "' must be an array");
  std::vector<std::array<double, N>> out;
  for (const auto& e : v) out.push_back(get_tuple<N>(e, name));
  return out;
}

void check_wire(const json& j) {
  if (!j.is_object()) violation("request body must be a JSON object");
  auto it = j.find("wire");
  if (it != j.end() && (!it->is_string() || it->get<std::string>() != kVersion)) {
    violation("unsupported wire version");
  }
}

json axis_to_json(const AxisMap& m) { return {{"offset", m.offset}, {"scale", m.scale}}; }

AxisMap parse_axis(const json& j, const char* name) {
  const json& v = field(j, name);
  AxisMap m{get_number(v, "offset"), get_number(v, "scale")};
  if (m.scale == 0.0) violation(std::string("field '") + name + ".scale' must be non-zero");
  return m;
}

std::optional<RequestExt> parse_optional_ext(const json& j) {
  auto it = j.find("ext");
  if (it == j.end() || it->is_null()) return std::nullopt;
  return parse_ext(*it);
}

}  // namespace

json to_json(const ViewportSpec& s) {
  return {{"yaw_deg", s.yaw_deg},
          {"pitch_deg", s.pitch_deg},
          {"hfov_deg", s.hfov_deg},
          {"width", s.out_width_px},
          {"height", s.out_height_px}};
}

ViewportSpec parse_viewport(const json& j) {
  ViewportSpec s{get_number(j, "yaw_deg"), get_number(j, "pitch_deg"), get_number(j, "hfov_deg"),
                 get_int(j, "width"), get_int(j, "height")};
  try {
    s.validate();
  } catch (const Error& e) {
    violation(std::string("viewport: ") + e.what());
  }
  return s;
}

json to_json(const GridSpec& g) {
  return {{"cols", g.cols}, {"rows", g.rows}, {"line_width_px", g.line_width_px}, {"font_size_px", g.font_size_px}};
}

GridSpec parse_grid(const json& j) {
  GridSpec g;
  g.cols = get_int(j, "cols");
  g.rows = get_int(j, "rows");
  if (j.contains("line_width_px")) g.line_width_px = get_int(j, "line_width_px");
  if (j.contains("font_size_px")) g.font_size_px = get_int(j, "font_size_px");
  if (g.cols < 1 || g.rows < 1) violation("grid must have positive cols and rows");
  return g;
}

json to_json(const FrameInfo& f) {
  json j{{"erp_width", f.erp_width}, {"erp_height", f.erp_height}};
  if (f.kind == FrameInfo::Kind::kViewport) {
    j["kind"] = "viewport";
    j["viewport"] = to_json(f.viewport);
  } else {
    j["kind"] = "erp_frame";
    j["width"] = f.map.width;
    j["height"] = f.map.height;
    j["map_x"] = axis_to_json(f.map.x);
    j["map_y"] = axis_to_json(f.map.y);
  }
  return j;
}

FrameInfo parse_frame(const json& j) {
  FrameInfo f;
  f.erp_width = get_int(j, "erp_width");
  f.erp_height = get_int(j, "erp_height");
  if (f.erp_width < 2 || f.erp_height < 1) violation("frame erp dimensions out of range");
  const std::string kind = get_string(j, "kind");
  if (kind == "viewport") {
    f.kind = FrameInfo::Kind::kViewport;
    f.viewport = parse_viewport(field(j, "viewport"));
  } else if (kind == "erp_frame") {
    f.kind = FrameInfo::Kind::kErpFrame;
    f.map.width = get_int(j, "width");
    f.map.height = get_int(j, "height");
    if (f.map.width < 1 || f.map.height < 1) violation("frame dimensions out of range");
    f.map.x = parse_axis(j, "map_x");
    f.map.y = parse_axis(j, "map_y");
  } else {
    violation("unknown frame kind '" + kind + "'");
  }
  return f;
}

json to_json(const RequestExt& e) {
  json j{{"image_id", e.image_id}, {"task", e.task}};
  if (e.frame) j["frame"] = to_json(*e.frame);
  if (e.grid) j["grid"] = to_json(*e.grid);
  return j;
}

RequestExt parse_ext(const json& j) {
  if (!j.is_object()) violation("'ext' must be an object");
  RequestExt e;
  e.image_id = get_optional_string(j, "image_id");
  e.task = get_optional_string(j, "task");
  if (auto it = j.find("frame"); it != j.end() && !it->is_null()) e.frame = parse_frame(*it);
  if (auto it = j.find("grid"); it != j.end() && !it->is_null()) e.grid = parse_grid(*it);
  return e;
}

json to_json(const VlmRequest& r) {
  json j{{"wire", kVersion}, {"prompt", r.prompt}, {"image_b64", r.image_b64}};
  if (!r.model.empty()) j["model"] = r.model;
  if (r.ext) j["ext"] = to_json(*r.ext);
  return j;
}

VlmRequest parse_vlm_request(const json& j) {
  check_wire(j);
  return {get_optional_string(j, "model"), get_string(j, "prompt", false), get_string(j, "image_b64", false),
          parse_optional_ext(j)};
}

json to_json(const VlmResponse& r) { return {{"text", r.text}}; }

VlmResponse parse_vlm_response_body(const json& j) { return {get_string(j, "text")}; }

json to_json(const OvdRequest& r) {
  json j{{"wire", kVersion}, {"image_b64", r.image_b64}, {"query", r.query}};
  if (!r.model.empty()) j["model"] = r.model;
  if (r.ext) j["ext"] = to_json(*r.ext);
  return j;
}

OvdRequest parse_ovd_request(const json& j) {
  check_wire(j);
  return {get_optional_string(j, "model"), get_string(j, "image_b64", false), get_string(j, "query", false),
          parse_optional_ext(j)};
}

json to_json(const OvdResponse& r) {
  json boxes = json::array(), points = json::array();
  for (const auto& b : r.boxes) boxes.push_back({b[0], b[1], b[2], b[3]});
  for (const auto& p : r.points) points.push_back({p[0], p[1]});
  return {{"boxes", boxes}, {"points", points}, {"scores", r.scores}};
}

OvdResponse parse_ovd_response(const json& j) {
  OvdResponse r;
  r.boxes = get_tuple_list<4>(j, "boxes");
  r.points = j.contains("points") ? get_tuple_list<2>(j, "points") : std::vector<std::array<double, 2>>{};
  const json& scores = field(j, "scores");
  if (!scores.is_array()) violation("field 'scores' must be an array");
  for (const auto& s : scores) {
    if (!s.is_number()) violation("field 'scores' must contain numbers");
    r.scores.push_back(s.get<double>());
  }
  if (r.scores.size() != r.boxes.size()) violation("'scores' and 'boxes' differ in length");
  return r;
}

json to_json(const SamRequest& r) {
  json points = json::array();
  for (const auto& p : r.points) points.push_back({p[0], p[1]});
  json j{{"wire", kVersion},
         {"image_b64", r.image_b64},
         {"box", {r.box[0], r.box[1], r.box[2], r.box[3]}},
         {"points", points}};
  if (!r.model.empty()) j["model"] = r.model;
  if (r.ext) j["ext"] = to_json(*r.ext);
  return j;
}

SamRequest parse_sam_request(const json& j) {
  check_wire(j);
  SamRequest r;
  r.model = get_optional_string(j, "model");
  r.image_b64 = get_string(j, "image_b64", false);
  r.box = get_tuple<4>(field(j, "box"), "box");
  if (!(r.box[0] < r.box[2] && r.box[1] < r.box[3])) violation("'box' must satisfy x0<x1 and y0<y1");
  r.points = j.contains("points") ? get_tuple_list<2>(j, "points") : std::vector<std::array<double, 2>>{};
  r.ext = parse_optional_ext(j);
  return r;
}

json to_json(const SamResponse& r) { return {{"mask_b64", r.mask_b64}}; }

SamResponse parse_sam_response(const json& j) { return {get_string(j, "mask_b64", false)}; }

}  // namespace pap::wire
