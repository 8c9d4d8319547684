#include "pap/backend.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "pap/error.hpp"
#include "pap/image_io.hpp"
#include "pap/mock.hpp"

namespace pap {

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kVlm: return "vlm";
    case BackendKind::kOvd: return "ovd";
    case BackendKind::kSam: return "sam";
  }
  return "?";
}

BackendKind backend_kind_from_string(std::string_view s) {
  if (s == "vlm") return BackendKind::kVlm;
  if (s == "ovd") return BackendKind::kOvd;
  if (s == "sam") return BackendKind::kSam;
  throw Error(ErrorCode::kConfigError, "unknown backend kind '" + std::string(s) + "'");
}

void ModelBackendConfig::validate() const {
  if (endpoint_url.empty()) throw Error(ErrorCode::kConfigError, "backend endpoint_url is empty");
  if (!(timeout_s > 0.0)) throw Error(ErrorCode::kConfigError, "backend timeout_s must be positive");
  if (retries < 0) throw Error(ErrorCode::kConfigError, "backend retries must be >= 0");
  if (backoff_base_s < 0.0) throw Error(ErrorCode::kConfigError, "backend backoff must be >= 0");
}

namespace {

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(const ModelBackendConfig& cfg) : cfg_(cfg) {
    const std::string& url = cfg.endpoint_url;
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    host_ = path_start == std::string::npos ? url : url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    if (cfg.auth_token && !cfg.auth_token->empty()) {
      token_ = *cfg.auth_token;
    } else if (const char* env = std::getenv("PAP_AUTH_TOKEN"); env != nullptr && *env != '\0') {
      token_ = env;
    }
  }

  HttpReply post(const std::string& path, const std::string& body) override {
    return send([&](httplib::Client& c) { return c.Post(prefix_ + path, headers(), body, "application/json"); });
  }

  HttpReply get(const std::string& path) override {
    return send([&](httplib::Client& c) { return c.Get(prefix_ + path, headers()); });
  }

  std::string describe() const override { return cfg_.endpoint_url; }

 private:
  httplib::Headers headers() const {
    httplib::Headers h;
    if (!token_.empty()) h.emplace("Authorization", "Bearer " + token_);
    return h;
  }

  template <typename Fn>
  HttpReply send(Fn&& fn) {
    // One client per request keeps concurrent callers independent.
    httplib::Client client(host_);
    const auto secs = static_cast<time_t>(cfg_.timeout_s);
    const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    const auto start = std::chrono::steady_clock::now();
    auto result = fn(client);
    if (!result) {
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const auto err = result.error();
      const bool timeout = err == httplib::Error::ConnectionTimeout ||
                           (err == httplib::Error::Read && elapsed >= 0.9 * cfg_.timeout_s);
      throw TransportFailure{timeout, httplib::to_string(err)};
    }
    return {result->status, result->body};
  }

  ModelBackendConfig cfg_;
  std::string host_;
  std::string prefix_;
  std::string token_;
};

class InProcessTransport final : public Transport {
 public:
  InProcessTransport(WireHandler handler, std::string name)
      : handler_(std::move(handler)), name_(std::move(name)) {}

  HttpReply post(const std::string& path, const std::string& body) override {
    return handler_("POST", path, body);
  }
  HttpReply get(const std::string& path) override { return handler_("GET", path, ""); }
  std::string describe() const override { return name_; }

 private:
  WireHandler handler_;
  std::string name_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(const ModelBackendConfig& cfg) {
  return std::make_shared<HttpTransport>(cfg);
}

std::shared_ptr<Transport> make_in_process_transport(WireHandler handler, std::string name) {
  return std::make_shared<InProcessTransport>(std::move(handler), std::move(name));
}

ModelClient::ModelClient(ModelBackendConfig cfg, std::shared_ptr<Transport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {
  cfg_.validate();
}

ModelClient ModelClient::connect(const ModelBackendConfig& cfg) {
  cfg.validate();
  if (cfg.endpoint_url.rfind("mock://", 0) == 0) {
    return ModelClient(cfg, make_mock_transport(cfg.endpoint_url));
  }
  if (cfg.endpoint_url.rfind("http://", 0) == 0) return ModelClient(cfg, make_http_transport(cfg));
  throw Error(ErrorCode::kConfigError, "unsupported endpoint scheme: " + cfg.endpoint_url);
}

std::string ModelClient::identifier() const {
  std::string id = std::string(to_string(cfg_.kind)) + "@" + transport_->describe();
  if (!cfg_.model.empty()) id += "#" + cfg_.model;
  return id;
}

wire::json ModelClient::call(const char* path, const wire::json& request) const {
  const std::string body = request.dump();
  int last_status = 0;
  std::string last_body;
  bool last_timeout = false;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    if (attempt > 0 && cfg_.backoff_base_s > 0.0) {
      // Total backoff stays within 10% of timeout_s so a stage never exceeds
      // timeout_s * (retries + 1) by more than that.
      const double cap = 0.1 * cfg_.timeout_s / cfg_.retries;
      const double delay = std::min(cfg_.backoff_base_s * std::pow(2.0, attempt - 1), cap);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    HttpReply reply;
    try {
      reply = transport_->post(path, body);
    } catch (const TransportFailure& f) {
      last_status = 0;
      last_body = f.message;
      last_timeout = f.timeout;
      continue;
    }
    last_timeout = false;
    if (reply.status >= 200 && reply.status < 300) {
      try {
        return wire::json::parse(reply.body);
      } catch (const wire::json::parse_error& e) {
        throw BackendError(reply.status, reply.body, std::string(path) + ": response is not JSON");
      }
    }
    last_status = reply.status;
    last_body = reply.body;
    if (reply.status < 500) break;  // client errors are not retried
  }
  if (last_timeout) {
    throw Error(ErrorCode::kTimeout, std::string(path) + " timed out after " +
                                         std::to_string(cfg_.retries + 1) + " attempts");
  }
  throw BackendError(last_status, last_body,
                     std::string(path) + " failed with status " + std::to_string(last_status));
}

std::string ModelClient::vlm_complete(const Image& image, const std::string& prompt,
                                      const std::optional<wire::RequestExt>& ext) const {
  wire::VlmRequest req{cfg_.model, prompt, io::base64_encode(io::encode_png(image)), ext};
  const auto reply = call(wire::kVlmPath, wire::to_json(req));
  try {
    return wire::parse_vlm_response_body(reply).text;
  } catch (const Error& e) {
    throw BackendError(200, reply.dump(), e.what());
  }
}

Detection sanitize_detection(Detection det, int width, int height) {
  auto& b = det.box;
  const double xmax = width - 0.5, ymax = height - 0.5;
  b[0] = std::clamp(b[0], -0.5, xmax);
  b[2] = std::clamp(b[2], -0.5, xmax);
  b[1] = std::clamp(b[1], -0.5, ymax);
  b[3] = std::clamp(b[3], -0.5, ymax);
  if (b[0] > b[2]) std::swap(b[0], b[2]);
  if (b[1] > b[3]) std::swap(b[1], b[3]);
  std::erase_if(det.points, [&b](const std::array<double, 2>& p) {
    return !(p[0] >= b[0] && p[0] < b[2] && p[1] >= b[1] && p[1] < b[3]);
  });
  return det;
}

Detection ModelClient::ovd_detect(const Image& image, const std::string& query,
                                  const std::optional<wire::RequestExt>& ext) const {
  if (query.empty()) throw Error(ErrorCode::kNoDetection, "empty detector query");
  wire::OvdRequest req{cfg_.model, io::base64_encode(io::encode_png(image)), query, ext};
  const auto reply = call(wire::kOvdPath, wire::to_json(req));
  wire::OvdResponse resp;
  try {
    resp = wire::parse_ovd_response(reply);
  } catch (const Error& e) {
    throw BackendError(200, reply.dump(), e.what());
  }
  if (resp.boxes.empty()) throw Error(ErrorCode::kNoDetection, "no boxes for '" + query + "'");

  std::size_t best = 0;
  for (std::size_t i = 1; i < resp.scores.size(); ++i) {
    if (resp.scores[i] > resp.scores[best]) best = i;
  }
  Detection det;
  det.box = resp.boxes[best];
  det.score = resp.scores[best];
  det.label = query;
  det.points = resp.points;
  det = sanitize_detection(std::move(det), image.width(), image.height());
  if (!(det.box[0] < det.box[2] && det.box[1] < det.box[3])) {
    throw Error(ErrorCode::kNoDetection, "selected box is empty after clamping");
  }
  if (det.points.empty()) {
    det.points.push_back({(det.box[0] + det.box[2]) / 2.0, (det.box[1] + det.box[3]) / 2.0});
  }
  return det;
}

BinaryMask ModelClient::sam_segment(const Image& image, const Detection& det,
                                    const std::optional<wire::RequestExt>& ext) const {
  wire::SamRequest req{cfg_.model, io::base64_encode(io::encode_png(image)), det.box, det.points, ext};
  const auto reply = call(wire::kSamPath, wire::to_json(req));
  Image mask_img;
  try {
    const auto resp = wire::parse_sam_response(reply);
    mask_img = io::decode_image(io::base64_decode(resp.mask_b64));
  } catch (const Error& e) {
    throw BackendError(200, reply.dump().substr(0, 256), e.what());
  }
  if (mask_img.width() != image.width() || mask_img.height() != image.height()) {
    throw Error(ErrorCode::kMaskDimMismatch,
                "mask " + std::to_string(mask_img.width()) + "x" + std::to_string(mask_img.height()) +
                    " for image " + std::to_string(image.width()) + "x" + std::to_string(image.height()));
  }
  if (mask_img.channels() == 1) return mask_from_image(mask_img, 128);
  BinaryMask mask(mask_img.width(), mask_img.height());
  for (int y = 0; y < mask_img.height(); ++y)
    for (int x = 0; x < mask_img.width(); ++x) mask.set(x, y, mask_img.at(x, y, 0) >= 128);
  return mask;
}

bool ModelClient::healthy() const {
  try {
    const HttpReply r = transport_->get(wire::kHealthPath);
    if (r.status != 200) return false;
    const auto j = wire::json::parse(r.body);
    return j.value("ok", false);
  } catch (...) {
    return false;
  }
}

}  // namespace pap
