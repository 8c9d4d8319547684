#include "pap/routing.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "pap/error.hpp"

namespace pap {

std::string build_routing_prompt(std::string_view task) {
  std::string prompt(routing_prompt_template());
  static constexpr std::string_view kPlaceholder = "\"TASK\"";
  const auto pos = prompt.find(kPlaceholder);
  if (pos != std::string::npos) {
    prompt.replace(pos, kPlaceholder.size(), "\"" + std::string(task) + "\"");
  }
  return prompt;
}

namespace {

// Forward scan that records every balanced top-level {...} span, skipping
// string literals and // comments. Returns the last one with comments removed.
std::optional<std::string> last_json_object(std::string_view text) {
  std::optional<std::string> last;
  std::string current;
  int depth = 0;
  bool in_string = false;
  bool escape = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (depth > 0) current.push_back(c);
      if (escape) {
        escape = false;
      } else if (c == '\\') {
        escape = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (depth > 0 && c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') ++i;
      current.push_back('\n');
      continue;
    }
    if (c == '"') {
      // Quotes only matter inside an object; prose apostrophes/quotes outside are ignored.
      if (depth > 0) {
        in_string = true;
        current.push_back(c);
      }
      continue;
    }
    if (c == '{') {
      if (depth == 0) current.clear();
      ++depth;
    }
    if (depth > 0) current.push_back(c);
    if (c == '}' && depth > 0) {
      if (--depth == 0) last = current;
    }
  }
  return last;
}

int parse_index(const nlohmann::json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == std::floor(d)) return static_cast<int>(d);
  }
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    std::size_t used = 0;
    try {
      const int i = std::stoi(s, &used);
      if (used == s.size()) return i;
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::kUnparseableResponse, "grid_boxes entry is not an integer: " + v.dump());
}

bool parse_flag(const nlohmann::json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (s == "true") return true;
    if (s == "false") return false;
  }
  if (v.is_number_integer()) return v.get<int>() != 0;
  throw Error(ErrorCode::kUnparseableResponse, "'small' is not a boolean: " + v.dump());
}

std::string optional_string(const nlohmann::json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw Error(ErrorCode::kUnparseableResponse, std::string("'") + name + "' is not a string");
  return it->get<std::string>();
}

}  // namespace

RoutingResult parse_vlm_response(std::string_view text, int cell_count) {
  const auto object = last_json_object(text);
  if (!object) throw Error(ErrorCode::kUnparseableResponse, "no JSON object in reply");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(*object);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kUnparseableResponse, e.what());
  }
  auto boxes = j.find("grid_boxes");
  if (boxes == j.end()) throw Error(ErrorCode::kUnparseableResponse, "missing 'grid_boxes'");
  std::set<int> cells;
  if (boxes->is_array()) {
    for (const auto& v : *boxes) cells.insert(parse_index(v));
  } else {
    cells.insert(parse_index(*boxes));
  }
  if (cells.empty()) throw Error(ErrorCode::kEmptyGridBoxes, "'grid_boxes' is empty");
  for (int c : cells) {
    if (c < 1 || c > cell_count) {
      throw Error(ErrorCode::kBadIndex, "grid box " + std::to_string(c) + " outside 1.." + std::to_string(cell_count));
    }
  }

  RoutingResult r;
  r.grid_boxes.assign(cells.begin(), cells.end());
  r.object_name = optional_string(j, "object_name");
  r.object_part = optional_string(j, "object_part");
  if (r.object_part.empty()) r.object_part = r.object_name;
  r.task = optional_string(j, "task");
  if (auto it = j.find("small"); it != j.end() && !it->is_null()) r.small = parse_flag(*it);
  r.raw_response = std::string(text);
  return r;
}

void RoutingConfig::validate() const {
  grid.validate();
  if (grid.cell_count() < 2) throw Error(ErrorCode::kInvalidSpec, "routing grid needs at least two cells");
  if (resolutions.empty()) throw Error(ErrorCode::kInvalidSpec, "routing needs at least one resolution");
  for (const auto& r : resolutions) {
    if (r[0] < 2 || r[1] < 2) throw Error(ErrorCode::kInvalidSpec, "routing resolution too small");
  }
  if (max_depth < 0) throw Error(ErrorCode::kInvalidSpec, "max_depth must be >= 0");
  if (parse_retries < 0) throw Error(ErrorCode::kInvalidSpec, "parse_retries must be >= 0");
}

std::array<int, 2> RoutingConfig::resolution_for_depth(int depth) const {
  const auto i = std::min(static_cast<std::size_t>(depth), resolutions.size() - 1);
  return resolutions[i];
}

namespace {

RoutingResult query(const ModelClient& vlm, const Image& overlay, const std::string& task, const FrameMap& frame,
                    const Image& erp, const RoutingConfig& cfg, const RequestContext& ctx, int& attempts) {
  wire::RequestExt ext;
  ext.image_id = ctx.image_id;
  ext.task = task;
  ext.frame = wire::FrameInfo{wire::FrameInfo::Kind::kErpFrame, erp.width(), erp.height(), frame, {}};
  ext.grid = cfg.grid;

  std::string prompt = build_routing_prompt(task);
  for (attempts = 1;; ++attempts) {
    const std::string reply = vlm.vlm_complete(overlay, prompt, ext);
    try {
      return parse_vlm_response(reply, cfg.grid.cell_count());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnparseableResponse || attempts > cfg.parse_retries) throw;
    }
    if (attempts == 1) prompt += kStrictJsonSuffix;
  }
}

}  // namespace

RoutingOutcome route(const Image& erp, const std::string& task, const ModelClient& vlm, const RoutingConfig& cfg,
                     const RequestContext& ctx) {
  cfg.validate();
  RoutingState state;
  state.task = task;
  state.depth = 0;

  // Depth 0: whole panorama, aspect preserved.
  const auto [w0, h0_nominal] = cfg.resolution_for_depth(0);
  const int h0 = std::max(2, static_cast<int>(std::lround(static_cast<double>(w0) * erp.height() / erp.width())));
  (void)h0_nominal;
  state.frame = FrameMap::scaled_erp(erp.width(), erp.height(), w0, h0);
  state.image = resize(erp, w0, h0);

  for (;;) {
    state.overlay = render_grid_overlay(state.image, cfg.grid);
    RoutingStep step;
    step.depth = state.depth;
    step.frame = state.frame;
    step.result = query(vlm, state.overlay, task, state.frame, erp, cfg, ctx, step.attempts);
    step.selection = merge_cells(step.result.grid_boxes, cfg.grid, state.frame, state.depth == 0);
    state.history.push_back(step);

    const bool stop = step.result.grid_boxes.size() >= 2 || !step.result.small || state.depth >= cfg.max_depth;
    if (stop) {
      return RoutingOutcome{std::move(state), step.result, step.selection};
    }

    // Zoom: crop the chosen cell from the full-resolution panorama.
    const CropRegion& cell = step.selection;
    const int x0 = static_cast<int>(std::floor(cell.erp_x0() + 1e-9));
    const int x1 = static_cast<int>(std::ceil(cell.erp_x1() - 1e-9));
    const int y0 = std::clamp(static_cast<int>(std::floor(cell.erp_y0() + 1e-9)), 0, erp.height() - 1);
    const int y1 = std::clamp(static_cast<int>(std::ceil(cell.erp_y1() - 1e-9)), y0 + 1, erp.height());
    const int cw = std::max(1, x1 - x0);
    const int ch = y1 - y0;

    ++state.depth;
    const auto [w, h] = cfg.resolution_for_depth(state.depth);
    state.frame = FrameMap{w, h, {static_cast<double>(x0), static_cast<double>(cw) / w},
                           {static_cast<double>(y0), static_cast<double>(ch) / h}};
    state.image = resize(crop_wrapped(erp, x0, y0, cw, ch), w, h);
  }
}

}  // namespace pap
