#include "pap/config.hpp"

#include <fstream>
#include <set>

#include "pap/error.hpp"

namespace pap {

using nlohmann::json;

void AppConfig::set_endpoint(const std::string& url) {
  vlm.endpoint_url = url;
  ovd.endpoint_url = url;
  sam.endpoint_url = url;
}

void AppConfig::validate() const {
  vlm.validate();
  ovd.validate();
  sam.validate();
  pipeline.validate();
  if (workers < 0) throw Error(ErrorCode::kConfigError, "workers must be >= 0");
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& why) {
  throw Error(ErrorCode::kConfigError, where + ": " + why);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) fail(where, "unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, const std::string& where, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    fail(where + "." + key, "wrong type");
  }
}

void read_backend(const json& j, const std::string& where, ModelBackendConfig& b) {
  check_keys(j, where, {"endpoint_url", "timeout_s", "retries", "auth_token", "model", "backoff_base_s"});
  read(j, "endpoint_url", where, b.endpoint_url);
  read(j, "timeout_s", where, b.timeout_s);
  read(j, "retries", where, b.retries);
  read(j, "model", where, b.model);
  read(j, "backoff_base_s", where, b.backoff_base_s);
  if (auto it = j.find("auth_token"); it != j.end() && !it->is_null()) {
    std::string token;
    read(j, "auth_token", where, token);
    b.auth_token = token;
  }
}

json backend_json(const ModelBackendConfig& b) {
  return {{"endpoint_url", b.endpoint_url},
          {"timeout_s", b.timeout_s},
          {"retries", b.retries},
          {"auth_token", b.auth_token ? json(*b.auth_token) : json(nullptr)},
          {"model", b.model},
          {"backoff_base_s", b.backoff_base_s}};
}

}  // namespace

AppConfig config_from_json(const json& j) {
  AppConfig cfg;
  check_keys(j, "config", {"backends", "routing", "gaze", "adaptive_gaze", "whole_viewport_fallback", "workers"});
  if (auto b = j.find("backends"); b != j.end()) {
    check_keys(*b, "backends", {"vlm", "ovd", "sam"});
    if (b->contains("vlm")) read_backend(b->at("vlm"), "backends.vlm", cfg.vlm);
    if (b->contains("ovd")) read_backend(b->at("ovd"), "backends.ovd", cfg.ovd);
    if (b->contains("sam")) read_backend(b->at("sam"), "backends.sam", cfg.sam);
  }
  if (auto r = j.find("routing"); r != j.end()) {
    check_keys(*r, "routing", {"grid", "resolutions", "max_depth", "parse_retries"});
    RoutingConfig& rc = cfg.pipeline.routing;
    if (auto g = r->find("grid"); g != r->end()) {
      check_keys(*g, "routing.grid", {"cols", "rows", "line_width_px", "font_size_px"});
      read(*g, "cols", "routing.grid", rc.grid.cols);
      read(*g, "rows", "routing.grid", rc.grid.rows);
      read(*g, "line_width_px", "routing.grid", rc.grid.line_width_px);
      read(*g, "font_size_px", "routing.grid", rc.grid.font_size_px);
    }
    read(*r, "resolutions", "routing", rc.resolutions);
    read(*r, "max_depth", "routing", rc.max_depth);
    read(*r, "parse_retries", "routing", rc.parse_retries);
  }
  if (auto g = j.find("gaze"); g != j.end()) {
    check_keys(*g, "gaze", {"margin_deg", "min_hfov_deg", "max_hfov_deg", "out_long_side_px"});
    GazeParams& gp = cfg.pipeline.gaze;
    read(*g, "margin_deg", "gaze", gp.margin_deg);
    read(*g, "min_hfov_deg", "gaze", gp.min_hfov_deg);
    read(*g, "max_hfov_deg", "gaze", gp.max_hfov_deg);
    read(*g, "out_long_side_px", "gaze", gp.out_long_side_px);
  }
  read(j, "adaptive_gaze", "config", cfg.pipeline.adaptive_gaze);
  read(j, "whole_viewport_fallback", "config", cfg.pipeline.whole_viewport_fallback);
  read(j, "workers", "config", cfg.workers);
  try {
    cfg.pipeline.validate();
  } catch (const Error& e) {
    fail("config", e.what());
  }
  return cfg;
}

json to_json(const AppConfig& cfg) {
  const auto& rc = cfg.pipeline.routing;
  const auto& gp = cfg.pipeline.gaze;
  return {{"backends", {{"vlm", backend_json(cfg.vlm)}, {"ovd", backend_json(cfg.ovd)}, {"sam", backend_json(cfg.sam)}}},
          {"routing",
           {{"grid",
             {{"cols", rc.grid.cols},
              {"rows", rc.grid.rows},
              {"line_width_px", rc.grid.line_width_px},
              {"font_size_px", rc.grid.font_size_px}}},
            {"resolutions", rc.resolutions},
            {"max_depth", rc.max_depth},
            {"parse_retries", rc.parse_retries}}},
          {"gaze",
           {{"margin_deg", gp.margin_deg},
            {"min_hfov_deg", gp.min_hfov_deg},
            {"max_hfov_deg", gp.max_hfov_deg},
            {"out_long_side_px", gp.out_long_side_px}}},
          {"adaptive_gaze", cfg.pipeline.adaptive_gaze},
          {"whole_viewport_fallback", cfg.pipeline.whole_viewport_fallback},
          {"workers", cfg.workers}};
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace pap
