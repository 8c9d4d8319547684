#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "pap/backend.hpp"
#include "pap/grid.hpp"
#include "pap/image.hpp"

namespace pap {

/// One parsed grid-selection answer.
struct RoutingResult {
  std::vector<int> grid_boxes;  // sorted, unique, 1-based
  std::string object_name;
  std::string object_part;  // falls back to object_name
  bool small = false;
  std::string task;
  std::string raw_response;

  friend bool operator==(const RoutingResult&, const RoutingResult&) = default;
};

/// The grid-prompt template with a literal "TASK" placeholder.
std::string_view routing_prompt_template() noexcept;
std::string build_routing_prompt(std::string_view task);
inline constexpr std::string_view kStrictJsonSuffix = "\n\nSTRICTLY output the JSON only.";

/// Extracts the last JSON object in a free-form reply (code fences, a
/// leading "Thinking" section and // line comments are tolerated).
/// Throws UnparseableResponse, EmptyGridBoxes or BadIndex.
RoutingResult parse_vlm_response(std::string_view text, int cell_count = 12);

struct RoutingConfig {
  GridSpec grid;
  /// Query resolution per depth; the last entry is reused for deeper levels.
  std::vector<std::array<int, 2>> resolutions{{2000, 1000}, {1500, 1000}};
  int max_depth = 2;
  int parse_retries = 2;

  void validate() const;
  std::array<int, 2> resolution_for_depth(int depth) const;
};

struct RoutingStep {
  int depth = 0;
  FrameMap frame;        // queried image -> ERP
  RoutingResult result;
  CropRegion selection;  // selected cells in the queried frame, mapped to ERP
  int attempts = 1;
};

struct RoutingState {
  int depth = 0;
  Image image;    // downsampled query image at this depth (no overlay)
  Image overlay;  // what the VLM saw
  FrameMap frame;
  std::string task;
  std::vector<RoutingStep> history;
};

struct RoutingOutcome {
  RoutingState state;    // final depth
  RoutingResult result;  // final answer
  CropRegion target;     // final selection; ERP extent via erp_x0() .. erp_y1()
};

/// Identifiers passed to the VLM alongside each query (wire `ext`).
struct RequestContext {
  std::string image_id;
};

/// Coarse-to-fine grid routing: query at depth 0 on the downsampled
/// panorama; while a single cell is chosen, flagged small, and depth <
/// max_depth, crop that cell from the full-resolution panorama, resize it to
/// the next resolution and query again.
RoutingOutcome route(const Image& erp, const std::string& task, const ModelClient& vlm,
                     const RoutingConfig& cfg, const RequestContext& ctx = {});

}  // namespace pap
