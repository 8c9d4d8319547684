#pragma once

// Oracle model servers backed by ground-truth masks. They answer pap-wire/1
// requests exactly as a perfect VLM / detector / segmenter would, using the
// `ext` frame description to project annotations into the queried image.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "pap/backend.hpp"
#include "pap/dataset.hpp"

namespace pap {

struct MockOptions {
  enum class SamMode { kOracle, kRectangle };

  /// Probability of replacing each chosen grid cell by a random neighbour.
  double grid_noise_p = 0.0;
  /// Uniform box jitter in pixels applied to each coordinate.
  double jitter_px = 0.0;
  SamMode sam_mode = SamMode::kOracle;
  std::uint64_t seed = 0;

  friend bool operator==(const MockOptions&, const MockOptions&) = default;
};

/// Parses `mock://<dir>?sam=oracle|rect&p=<prob>&jitter=<px>&seed=<n>`.
MockOptions parse_mock_url(const std::string& url, std::filesystem::path& dataset_dir);

class OracleMock {
 public:
  OracleMock(std::filesystem::path dataset_dir, MockOptions options);

  /// Dispatches one request. Schema violations map to 422, unknown images to
  /// 404, anything else unexpected to 500.
  HttpReply handle(const std::string& method, const std::string& path, const std::string& body) const;

  const MockOptions& options() const noexcept { return options_; }

  /// Ground-truth ERP mask of a record, loaded on first use.
  std::shared_ptr<const BinaryMask> ground_truth(const AnnotationRecord& rec) const;
  /// Record addressed by a request: matching id, else image file name/stem plus task.
  const AnnotationRecord& find_record(const std::string& image_id, const std::string& task) const;

 private:
  wire::json complete(const wire::json& request) const;
  wire::json detect(const wire::json& request) const;
  wire::json segment(const wire::json& request) const;

  std::filesystem::path dataset_dir_;
  MockOptions options_;
  std::vector<AnnotationRecord> records_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::string, std::shared_ptr<const BinaryMask>> cache_;
};

/// Ground truth resampled into a request frame (viewport or ERP frame).
BinaryMask project_ground_truth(const BinaryMask& erp_mask, const wire::FrameInfo& frame);

/// In-process transport; mocks for the same URL share one OracleMock.
std::shared_ptr<Transport> make_mock_transport(const std::string& url);

/// Serves the three endpoints plus /healthz over HTTP.
class MockServer {
 public:
  MockServer(std::filesystem::path dataset_dir, MockOptions options);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop() is called from elsewhere.
  void run(const std::string& host, int port);
  void stop();
  int port() const noexcept { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace pap
