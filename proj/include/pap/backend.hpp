#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pap/image.hpp"
#include "pap/wire.hpp"

namespace pap {

enum class BackendKind { kVlm, kOvd, kSam };

std::string_view to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view s);

/// Where and how to reach one model server. Endpoints are either
/// `http://host:port` or `mock://<dataset_dir>[?sam=rect&p=0.1&jitter=2&seed=7]`
/// for the in-process oracle.
struct ModelBackendConfig {
  BackendKind kind = BackendKind::kVlm;
  std::string endpoint_url;
  double timeout_s = 60.0;
  int retries = 2;
  std::optional<std::string> auth_token;
  std::string model;
  /// First retry delay; doubles on every further attempt.
  double backoff_base_s = 1.0;

  void validate() const;
};

/// Bounding box and key points in viewport pixel coordinates (pixel x has its
/// centre at x). Pixel (x, y) lies in the box iff x0 <= x < x1 and y0 <= y < y1,
/// so the tight box of pixels [a, b] is [a - 0.5, b + 0.5].
struct Detection {
  std::array<double, 4> box{};  // x0, y0, x1, y1
  std::vector<std::array<double, 2>> points;
  double score = 0.0;
  std::string label;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct HttpReply {
  int status = 0;
  std::string body;
};

/// Raw request/response channel. Implementations throw TransportFailure when
/// no reply was obtained.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpReply post(const std::string& path, const std::string& body) = 0;
  virtual HttpReply get(const std::string& path) = 0;
  virtual std::string describe() const = 0;
};

struct TransportFailure {
  bool timeout = false;
  std::string message;
};

/// Server-side request handler shared by the in-process transport and the
/// HTTP mock server.
using WireHandler = std::function<HttpReply(const std::string& method, const std::string& path,
                                            const std::string& body)>;

std::shared_ptr<Transport> make_http_transport(const ModelBackendConfig& cfg);
std::shared_ptr<Transport> make_in_process_transport(WireHandler handler, std::string name);

/// pap-wire/1 client for one backend with retry and backoff.
class ModelClient {
 public:
  ModelClient(ModelBackendConfig cfg, std::shared_ptr<Transport> transport);

  /// Builds the transport from the endpoint scheme (http:// or mock://).
  static ModelClient connect(const ModelBackendConfig& cfg);

  const ModelBackendConfig& config() const noexcept { return cfg_; }
  std::string identifier() const;

  std::string vlm_complete(const Image& image, const std::string& prompt,
                           const std::optional<wire::RequestExt>& ext = std::nullopt) const;

  /// Highest-scoring box with the points that fall inside it (box centre when
  /// none do). Throws NoDetection when the server returns no boxes.
  Detection ovd_detect(const Image& image, const std::string& query,
                       const std::optional<wire::RequestExt>& ext = std::nullopt) const;

  /// Binarized at 128. Throws MaskDimMismatch when the mask size differs from `image`.
  BinaryMask sam_segment(const Image& image, const Detection& det,
                         const std::optional<wire::RequestExt>& ext = std::nullopt) const;

  bool healthy() const;

 private:
  wire::json call(const char* path, const wire::json& request) const;

  ModelBackendConfig cfg_;
  std::shared_ptr<Transport> transport_;
};

/// Clamps a detection to the image and drops points outside the box.
Detection sanitize_detection(Detection det, int width, int height);

}  // namespace pap
