#include "pap/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "pap/error.hpp"

namespace pap {

Backends Backends::connect(const ModelBackendConfig& vlm, const ModelBackendConfig& ovd,
                           const ModelBackendConfig& sam) {
  return {ModelClient::connect(vlm), ModelClient::connect(ovd), ModelClient::connect(sam)};
}

void PipelineConfig::validate() const {
  routing.validate();
  gaze.validate();
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kRouting: return "routing";
    case Stage::kGaze: return "gaze";
    case Stage::kDetection: return "detection";
    case Stage::kSegmentation: return "segmentation";
    case Stage::kReprojection: return "reprojection";
  }
  return "?";
}

RawCrop raw_erp_crop(const Image& erp, const CropRegion& region, double margin_deg, int long_side) {
  const int W = erp.width(), H = erp.height();
  const double mx = margin_deg / 360.0 * W;
  const double my = margin_deg / 180.0 * H;
  int x0 = static_cast<int>(std::floor(region.erp_x0() - mx + 1e-9));
  int x1 = static_cast<int>(std::ceil(region.erp_x1() + mx - 1e-9));
  if (x1 - x0 > W) {
    const int excess = x1 - x0 - W;
    x0 += excess / 2;
    x1 = x0 + W;
  }
  const int y0 = std::clamp(static_cast<int>(std::floor(region.erp_y0() - my + 1e-9)), 0, H - 1);
  const int y1 = std::clamp(static_cast<int>(std::ceil(region.erp_y1() + my - 1e-9)), y0 + 1, H);
  const int cw = std::max(1, x1 - x0), ch = y1 - y0;

  int w = long_side, h = long_side;
  if (cw >= ch) {
    h = std::max(2, static_cast<int>(std::lround(static_cast<double>(long_side) * ch / cw)));
  } else {
    w = std::max(2, static_cast<int>(std::lround(static_cast<double>(long_side) * cw / ch)));
  }
  RawCrop out;
  out.frame = FrameMap{w, h, {static_cast<double>(x0), static_cast<double>(cw) / w},
                       {static_cast<double>(y0), static_cast<double>(ch) / h}};
  out.image = resize(crop_wrapped(erp, x0, y0, cw, ch), w, h);
  return out;
}

BinaryMask reproject_frame_mask_to_erp(const BinaryMask& mask, const FrameMap& frame, ErpDims erp) {
  if (mask.width() != frame.width || mask.height() != frame.height) {
    throw Error(ErrorCode::kDimensionMismatch, "mask does not match its frame");
  }
  const int W = erp.width;
  BinaryMask out(erp.width, erp.height);
  std::vector<int> cols(W, -1);
  for (int i = 0; i < W; ++i) {
    // Periodic copy of the column centre at or right of the frame's left edge.
    double u = i + 0.5;
    u -= std::floor((u - frame.x.offset) / W) * W;
    const double fx = frame.x.invert(u);
    const int c = static_cast<int>(std::floor(fx));
    if (c >= 0 && c < frame.width) cols[i] = c;
  }
  for (int j = 0; j < erp.height; ++j) {
    const double fy = frame.y.invert(j + 0.5);
    const int r = static_cast<int>(std::floor(fy));
    if (r < 0 || r >= frame.height) continue;
    const std::uint8_t* src = mask.row(r);
    std::uint8_t* dst = out.row(j);
    for (int i = 0; i < W; ++i) {
      if (cols[i] >= 0) dst[i] = src[cols[i]];
    }
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Detection whole_view_detection(const Image& view) {
  Detection d;
  d.box = {-0.5, -0.5, view.width() - 0.5, view.height() - 0.5};
  d.points = {{(view.width() - 1) / 2.0, (view.height() - 1) / 2.0}};
  d.score = 0.0;
  d.label = "whole-view";
  return d;
}

}  // namespace

PipelineResult run_pipeline(const Image& erp, const std::string& task, const Backends& backends,
                            const PipelineConfig& cfg, const RequestContext& ctx) {
  cfg.validate();
  auto result = std::make_shared<PipelineResult>();
  result->backends = {{"vlm", backends.vlm.identifier()},
                      {"ovd", backends.ovd.identifier()},
                      {"sam", backends.sam.identifier()}};
  const ErpDims dims{erp.width(), erp.height()};

  Stage stage = Stage::kRouting;
  auto t0 = Clock::now();
  const auto finish = [&](const char* name) {
    result->timings_ms[name] = ms_since(t0);
    t0 = Clock::now();
  };

  try {
    result->routing = route(erp, task, backends.vlm, cfg.routing, ctx);
    finish("routing");
    const RoutingOutcome& routed = *result->routing;

    stage = Stage::kGaze;
    wire::FrameInfo view;
    view.erp_width = dims.width;
    view.erp_height = dims.height;
    if (cfg.adaptive_gaze) {
      GazeView g = gaze_extract(erp, routed.target, cfg.gaze);
      view.kind = wire::FrameInfo::Kind::kViewport;
      view.viewport = g.spec;
      result->view_image = std::move(g.image);
    } else {
      RawCrop crop = raw_erp_crop(erp, routed.target, cfg.gaze.margin_deg, cfg.gaze.out_long_side_px);
      view.kind = wire::FrameInfo::Kind::kErpFrame;
      view.map = crop.frame;
      result->view_image = std::move(crop.image);
    }
    result->view = view;
    finish("gaze");

    stage = Stage::kDetection;
    const wire::RequestExt ext{ctx.image_id, task, view, std::nullopt};
    std::vector<std::string> queries;
    for (const std::string* q : {&routed.result.object_part, &routed.result.object_name}) {
      if (!q->empty() && std::find(queries.begin(), queries.end(), *q) == queries.end()) queries.push_back(*q);
    }
    std::string last_failure = "no detector query available";
    for (const auto& q : queries) {
      try {
        result->detection = backends.ovd.ovd_detect(result->view_image, q, ext);
        result->detection_query = q;
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoDetection) throw;
        last_failure = e.what();
      }
    }
    if (!result->detection) {
      if (!cfg.whole_viewport_fallback) {
        throw Error(ErrorCode::kGroundingFailed, "detector found nothing: " + last_failure);
      }
      result->detection = whole_view_detection(result->view_image);
    }
    finish("detection");

    stage = Stage::kSegmentation;
    result->mask_persp = backends.sam.sam_segment(result->view_image, *result->detection, ext);
    finish("segmentation");

    stage = Stage::kReprojection;
    result->mask_erp = view.kind == wire::FrameInfo::Kind::kViewport
                           ? reproject_mask_to_erp(result->mask_persp, view.viewport, dims)
                           : reproject_frame_mask_to_erp(result->mask_persp, view.map, dims);
    finish("reprojection");
  } catch (const PipelineError&) {
    throw;
  } catch (const Error& e) {
    result->timings_ms[std::string(to_string(stage))] = ms_since(t0);
    throw PipelineError(stage, e.code(), e.what(), result);
  } catch (const std::exception& e) {
    result->timings_ms[std::string(to_string(stage))] = ms_since(t0);
    throw PipelineError(stage, ErrorCode::kIoError, e.what(), result);
  }
  return std::move(*result);
}

nlohmann::json routing_to_json(const RoutingOutcome& outcome) {
  auto region = [](const CropRegion& r) {
    return nlohmann::json{{"erp_x0", r.erp_x0()}, {"erp_x1", r.erp_x1()}, {"erp_y0", r.erp_y0()},
                          {"erp_y1", r.erp_y1()}, {"wraps_seam", r.wraps_seam}};
  };
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : outcome.state.history) {
    steps.push_back({{"depth", s.depth},
                     {"frame", {{"width", s.frame.width},
                                {"height", s.frame.height},
                                {"map_x", {{"offset", s.frame.x.offset}, {"scale", s.frame.x.scale}}},
                                {"map_y", {{"offset", s.frame.y.offset}, {"scale", s.frame.y.scale}}}}},
                     {"grid_boxes", s.result.grid_boxes},
                     {"small", s.result.small},
                     {"object_name", s.result.object_name},
                     {"object_part", s.result.object_part},
                     {"attempts", s.attempts},
                     {"selection", region(s.selection)},
                     {"raw_response", s.result.raw_response}});
  }
  return {{"task", outcome.state.task},
          {"final_depth", outcome.state.depth},
          {"grid_boxes", outcome.result.grid_boxes},
          {"object_name", outcome.result.object_name},
          {"object_part", outcome.result.object_part},
          {"small", outcome.result.small},
          {"target", region(outcome.target)},
          {"steps", std::move(steps)}};
}

nlohmann::json view_to_json(const wire::FrameInfo& view) {
  nlohmann::json j = wire::to_json(view);
  if (view.kind == wire::FrameInfo::Kind::kViewport) {
    const ErpDims dims{view.erp_width, view.erp_height};
    nlohmann::json poly = nlohmann::json::array();
    for (const auto& s : frustum_outline(view.viewport, 64)) poly.push_back({rad2deg(s.lon_rad), rad2deg(s.lat_rad)});
    j["footprint_polygon_deg"] = std::move(poly);
    const ErpFootprint fp = viewport_footprint(view.viewport, dims);
    j["footprint"] = {{"row_begin", fp.row_begin},
                      {"row_end", fp.row_end},
                      {"col_begin", fp.col_begin},
                      {"col_count", fp.col_count},
                      {"full_scan", fp.full_scan}};
  }
  return j;
}

nlohmann::json result_summary(const PipelineResult& r) {
  nlohmann::json j;
  if (r.routing) j["routing"] = routing_to_json(*r.routing);
  if (r.view) j["view"] = view_to_json(*r.view);
  if (r.detection) {
    j["detection"] = {{"box", r.detection->box},
                      {"points", r.detection->points},
                      {"score", r.detection->score},
                      {"label", r.detection->label},
                      {"query", r.detection_query}};
  }
  j["mask_erp_area"] = r.mask_erp.area();
  j["timings_ms"] = r.timings_ms;
  j["backends"] = r.backends;
  return j;
}

}  // namespace pap
