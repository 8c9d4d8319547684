#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "pap/backend.hpp"
#include "pap/pipeline.hpp"

namespace pap {

/// Everything a CLI run needs. Loaded from JSON; unknown keys are rejected.
///
///   {
///     "backends": {"vlm": {"endpoint_url": "...", "timeout_s": 60, "retries": 2,
///                          "auth_token": null, "model": "", "backoff_base_s": 1.0},
///                  "ovd": {...}, "sam": {...}},
///     "routing": {"grid": {"cols": 4, "rows": 3, "line_width_px": 5, "font_size_px": 50},
///                 "resolutions": [[2000, 1000], [1500, 1000]], "max_depth": 2, "parse_retries": 2},
///     "gaze": {"margin_deg": 10, "min_hfov_deg": 20, "max_hfov_deg": 150, "out_long_side_px": 1024},
///     "adaptive_gaze": true,
///     "whole_viewport_fallback": true,
///     "workers": 0
///   }
struct AppConfig {
  AppConfig() {
    vlm.kind = BackendKind::kVlm;
    ovd.kind = BackendKind::kOvd;
    sam.kind = BackendKind::kSam;
  }

  ModelBackendConfig vlm;
  ModelBackendConfig ovd;
  ModelBackendConfig sam;
  PipelineConfig pipeline;
  int workers = 0;

  /// Points all three backends at one endpoint (http base URL or mock://).
  void set_endpoint(const std::string& url);
  void validate() const;
};

/// Throws ConfigError naming the offending key.
AppConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AppConfig& cfg);
AppConfig load_config(const std::filesystem::path& path);

}  // namespace pap
