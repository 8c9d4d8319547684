#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "pap/backend.hpp"
#include "pap/error.hpp"
#include "pap/gaze.hpp"
#include "pap/routing.hpp"

namespace pap {

struct Backends {
  ModelClient vlm;
  ModelClient ovd;
  ModelClient sam;

  static Backends connect(const ModelBackendConfig& vlm, const ModelBackendConfig& ovd,
                          const ModelBackendConfig& sam);
};

struct PipelineConfig {
  RoutingConfig routing;
  GazeParams gaze;
  /// When false, detection and segmentation run on the raw ERP crop of the
  /// routed region (widened by the gaze margin) instead of a perspective view.
  bool adaptive_gaze = true;
  /// Last rung of the detection fallback ladder.
  bool whole_viewport_fallback = true;

  void validate() const;
};

enum class Stage { kRouting, kGaze, kDetection, kSegmentation, kReprojection };
std::string_view to_string(Stage stage);

struct PipelineResult {
  std::optional<RoutingOutcome> routing;
  /// Frame that detection and segmentation saw: a viewport, or an ERP crop.
  std::optional<wire::FrameInfo> view;
  Image view_image;
  std::optional<Detection> detection;
  std::string detection_query;  // the query that produced `detection`, empty for the whole-view fallback
  BinaryMask mask_persp;        // view-frame mask
  BinaryMask mask_erp;
  std::map<std::string, double> timings_ms;
  std::map<std::string, std::string> backends;
};

/// Failure of one pipeline stage. Carries the underlying error code and
/// everything computed before the failure.
class PipelineError : public Error {
 public:
  PipelineError(Stage stage, ErrorCode code, const std::string& what, std::shared_ptr<const PipelineResult> partial)
      : Error(code, "[" + std::string(to_string(stage)) + "] " + what), stage_(stage), partial_(std::move(partial)) {}

  Stage stage() const noexcept { return stage_; }
  const PipelineResult& partial() const noexcept { return *partial_; }

 private:
  Stage stage_;
  std::shared_ptr<const PipelineResult> partial_;
};

/// route -> gaze -> detect (object_part, object_name, whole view) -> segment
/// -> reproject. Throws PipelineError; exhausting the detection ladder
/// raises GroundingFailed.
PipelineResult run_pipeline(const Image& erp, const std::string& task, const Backends& backends,
                            const PipelineConfig& cfg, const RequestContext& ctx = {});

/// ERP crop of `region` widened by `margin_deg`, as a frame map plus pixels,
/// resized so its long side is `long_side`.
struct RawCrop {
  Image image;
  FrameMap frame;
};
RawCrop raw_erp_crop(const Image& erp, const CropRegion& region, double margin_deg, int long_side);

/// Nearest-neighbour pull of a frame mask back onto the ERP grid.
BinaryMask reproject_frame_mask_to_erp(const BinaryMask& mask, const FrameMap& frame, ErpDims erp);

nlohmann::json routing_to_json(const RoutingOutcome& outcome);
/// View spec plus the spherical outline of its frustum (degrees).
nlohmann::json view_to_json(const wire::FrameInfo& view);
nlohmann::json result_summary(const PipelineResult& result);

}  // namespace pap
