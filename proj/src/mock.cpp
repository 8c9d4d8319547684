#include "pap/mock.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "pap/error.hpp"
#include "pap/image_io.hpp"

namespace pap {

namespace fs = std::filesystem;

MockOptions parse_mock_url(const std::string& url, fs::path& dataset_dir) {
  static constexpr std::string_view kScheme = "mock://";
  if (url.rfind(kScheme, 0) != 0) throw Error(ErrorCode::kConfigError, "not a mock:// url: " + url);
  const std::string rest = url.substr(kScheme.size());
  const auto q = rest.find('?');
  dataset_dir = rest.substr(0, q);
  if (dataset_dir.empty()) throw Error(ErrorCode::kConfigError, "mock:// url names no dataset directory");

  MockOptions opts;
  if (q == std::string::npos) return opts;
  std::istringstream params(rest.substr(q + 1));
  std::string item;
  while (std::getline(params, item, '&')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    const std::string key = item.substr(0, eq);
    const std::string value = eq == std::string::npos ? "" : item.substr(eq + 1);
    try {
      if (key == "sam") {
        if (value == "oracle") {
          opts.sam_mode = MockOptions::SamMode::kOracle;
        } else if (value == "rect") {
          opts.sam_mode = MockOptions::SamMode::kRectangle;
        } else {
          throw Error(ErrorCode::kConfigError, "mock sam must be oracle or rect, got '" + value + "'");
        }
      } else if (key == "p") {
        opts.grid_noise_p = std::stod(value);
      } else if (key == "jitter") {
        opts.jitter_px = std::stod(value);
      } else if (key == "seed") {
        opts.seed = std::stoull(value);
      } else {
        throw Error(ErrorCode::kConfigError, "unknown mock parameter '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kConfigError, "bad value for mock parameter '" + key + "'");
    }
  }
  if (!(opts.grid_noise_p >= 0.0 && opts.grid_noise_p <= 1.0)) {
    throw Error(ErrorCode::kConfigError, "mock p must lie in [0, 1]");
  }
  if (!(opts.jitter_px >= 0.0)) throw Error(ErrorCode::kConfigError, "mock jitter must be >= 0");
  return opts;
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Per-request generator: identical requests draw identical noise.
std::mt19937_64 request_rng(std::uint64_t seed, std::string_view path, const wire::json& ext) {
  return std::mt19937_64(fnv1a(ext.dump(), fnv1a(path, seed ^ 0x9e3779b97f4a7c15ull)));
}

wire::RequestExt require_ext(const std::optional<wire::RequestExt>& ext) {
  if (!ext) throw Error(ErrorCode::kSchemaViolation, "ext: required by the oracle mock");
  if (!ext->frame) throw Error(ErrorCode::kSchemaViolation, "ext.frame: required by the oracle mock");
  return *ext;
}

void check_erp_dims(const wire::FrameInfo& f, const BinaryMask& gt) {
  if (f.erp_width != gt.width() || f.erp_height != gt.height()) {
    throw Error(ErrorCode::kSchemaViolation, "ext.frame: ERP dimensions do not match the annotated image");
  }
}

int frame_width(const wire::FrameInfo& f) {
  return f.kind == wire::FrameInfo::Kind::kViewport ? f.viewport.out_width_px : f.map.width;
}

int frame_height(const wire::FrameInfo& f) {
  return f.kind == wire::FrameInfo::Kind::kViewport ? f.viewport.out_height_px : f.map.height;
}

HttpReply json_reply(int status, const wire::json& j) { return {status, j.dump()}; }

HttpReply error_reply(int status, const Error& e) {
  return json_reply(status, {{"error", std::string(to_string(e.code()))}, {"message", e.what()}});
}

// Index of the floor(k * extent / divisions) band containing pixel p.
int band_of(int p, int extent, int divisions) {
  int k = static_cast<int>(static_cast<long long>(p) * divisions / extent);
  while (k + 1 < divisions && static_cast<long long>(k + 1) * extent / divisions <= p) ++k;
  while (k > 0 && static_cast<long long>(k) * extent / divisions > p) --k;
  return k;
}

}  // namespace

BinaryMask project_ground_truth(const BinaryMask& erp_mask, const wire::FrameInfo& frame) {
  if (frame.kind == wire::FrameInfo::Kind::kViewport) return project_mask_to_viewport(erp_mask, frame.viewport);
  const FrameMap& m = frame.map;
  const int W = erp_mask.width(), H = erp_mask.height();
  BinaryMask out(m.width, m.height);
  std::vector<int> cols(m.width);
  for (int c = 0; c < m.width; ++c) {
    const long long u = static_cast<long long>(std::floor(m.x.apply(c + 0.5)));
    cols[c] = static_cast<int>(((u % W) + W) % W);
  }
  for (int r = 0; r < m.height; ++r) {
    const int v = std::clamp(static_cast<int>(std::floor(m.y.apply(r + 0.5))), 0, H - 1);
    const std::uint8_t* src = erp_mask.row(v);
    std::uint8_t* dst = out.row(r);
    for (int c = 0; c < m.width; ++c) dst[c] = src[cols[c]];
  }
  return out;
}

OracleMock::OracleMock(fs::path dataset_dir, MockOptions options)
    : dataset_dir_(std::move(dataset_dir)), options_(options), records_(load_annotations(dataset_dir_)) {}

std::shared_ptr<const BinaryMask> OracleMock::ground_truth(const AnnotationRecord& rec) const {
  std::lock_guard lock(cache_mutex_);
  auto it = cache_.find(rec.id);
  if (it != cache_.end()) return it->second;
  auto mask = std::make_shared<const BinaryMask>(io::read_mask(dataset_dir_ / rec.mask_path));
  cache_.emplace(rec.id, mask);
  return mask;
}

const AnnotationRecord& OracleMock::find_record(const std::string& image_id, const std::string& task) const {
  for (const auto& r : records_) {
    if (r.id == image_id) return r;
  }
  for (const auto& r : records_) {
    const fs::path p(r.image_path);
    if ((p.filename().string() == image_id || p.stem().string() == image_id || r.image_path == image_id) &&
        r.question == task) {
      return r;
    }
  }
  throw Error(ErrorCode::kUnknownImage, "no annotation for image '" + image_id + "' and task '" + task + "'");
}

wire::json OracleMock::complete(const wire::json& request) const {
  const auto req = wire::parse_vlm_request(request);
  const auto ext = require_ext(req.ext);
  if (!ext.grid) throw Error(ErrorCode::kSchemaViolation, "ext.grid: required by the oracle mock");
  const wire::FrameInfo& frame = *ext.frame;
  if (frame.kind != wire::FrameInfo::Kind::kErpFrame) {
    throw Error(ErrorCode::kSchemaViolation, "ext.frame.kind: grid queries need an erp_frame");
  }
  const GridSpec grid = *ext.grid;
  grid.validate();
  const AnnotationRecord& rec = find_record(ext.image_id, ext.task);
  const auto gt = ground_truth(rec);
  check_erp_dims(frame, *gt);

  // Map every GT pixel centre into the frame, trying the periodic copies of
  // its column so seam-wrapping crops see both halves.
  const FrameMap& m = frame.map;
  const int W = gt->width();
  std::set<int> cells;
  std::size_t inside = 0;
  for (int y = 0; y < gt->height(); ++y) {
    const double fy = m.y.invert(y + 0.5);
    if (!(fy >= 0.0 && fy < m.height)) continue;
    const int row = band_of(static_cast<int>(fy), m.height, grid.rows);
    const std::uint8_t* bits = gt->row(y);
    for (int x = 0; x < W; ++x) {
      if (!bits[x]) continue;
      for (int k = -1; k <= 1; ++k) {
        const double fx = m.x.invert(x + 0.5 + static_cast<double>(k) * W);
        if (fx >= 0.0 && fx < m.width) {
          ++inside;
          cells.insert(row * grid.cols + band_of(static_cast<int>(fx), m.width, grid.cols) + 1);
          break;
        }
      }
    }
  }
  const double frame_area = m.width * m.x.scale * m.height * m.y.scale;
  const bool small = !cells.empty() && static_cast<double>(inside) < 0.001 * frame_area;
  if (cells.empty()) cells.insert((grid.rows / 2) * grid.cols + grid.cols / 2 + 1);

  if (options_.grid_noise_p > 0.0) {
    auto rng = request_rng(options_.seed, wire::kVlmPath, request.at("ext"));
    std::bernoulli_distribution flip(options_.grid_noise_p);
    std::set<int> noisy;
    for (int c : cells) {
      if (!flip(rng)) {
        noisy.insert(c);
        continue;
      }
      const int r = (c - 1) / grid.cols, col = (c - 1) % grid.cols;
      std::vector<int> neighbours;
      if (col > 0) neighbours.push_back(c - 1);
      if (col + 1 < grid.cols) neighbours.push_back(c + 1);
      if (r > 0) neighbours.push_back(c - grid.cols);
      if (r + 1 < grid.rows) neighbours.push_back(c + grid.cols);
      std::uniform_int_distribution<std::size_t> pick(0, neighbours.size() - 1);
      noisy.insert(neighbours.empty() ? c : neighbours[pick(rng)]);
    }
    cells = std::move(noisy);
  }

  wire::json answer = {{"grid_boxes", std::vector<int>(cells.begin(), cells.end())},
                       {"task", rec.question},
                       {"object_name", rec.object_name},
                       {"object_part", rec.object_name},
                       {"small", small}};
  std::string text = "#### Thinking\nThe target is the " + rec.object_name + ". It covers " +
                     std::to_string(cells.size()) + " grid box(es).\n\n#### Output\n```json\n" + answer.dump(2) +
                     "\n```\n";
  return wire::to_json(wire::VlmResponse{std::move(text)});
}

wire::json OracleMock::detect(const wire::json& request) const {
  const auto req = wire::parse_ovd_request(request);
  const auto ext = require_ext(req.ext);
  const AnnotationRecord& rec = find_record(ext.image_id, ext.task);
  const auto gt = ground_truth(rec);
  check_erp_dims(*ext.frame, *gt);
  const BinaryMask proj = project_ground_truth(*gt, *ext.frame);

  int x0 = proj.width(), y0 = proj.height(), x1 = -1, y1 = -1;
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < proj.height(); ++y) {
    const std::uint8_t* bits = proj.row(y);
    for (int x = 0; x < proj.width(); ++x) {
      if (!bits[x]) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
      sx += x;
      sy += y;
      ++n;
    }
  }
  wire::OvdResponse resp;
  if (n == 0) return wire::to_json(resp);

  std::array<double, 4> box{x0 - 0.5, y0 - 0.5, x1 + 0.5, y1 + 0.5};
  if (options_.jitter_px > 0.0) {
    auto rng = request_rng(options_.seed, wire::kOvdPath, request.at("ext"));
    std::uniform_real_distribution<double> d(-options_.jitter_px, options_.jitter_px);
    for (double& v : box) v += d(rng);
    if (box[0] > box[2]) std::swap(box[0], box[2]);
    if (box[1] > box[3]) std::swap(box[1], box[3]);
  }
  // Centroid, snapped to the nearest mask pixel when it falls outside the mask.
  double px = sx / n, py = sy / n;
  if (!proj.get(static_cast<int>(std::lround(px)), static_cast<int>(std::lround(py)))) {
    double best = std::numeric_limits<double>::infinity();
    double bx = px, by = py;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        if (!proj.get(x, y)) continue;
        const double d = (x - px) * (x - px) + (y - py) * (y - py);
        if (d < best) best = d, bx = x, by = y;
      }
    px = bx;
    py = by;
  }
  resp.boxes.push_back(box);
  resp.points.push_back({px, py});
  resp.scores.push_back(1.0);
  return wire::to_json(resp);
}

wire::json OracleMock::segment(const wire::json& request) const {
  const auto req = wire::parse_sam_request(request);
  const auto ext = require_ext(req.ext);
  const int w = frame_width(*ext.frame), h = frame_height(*ext.frame);
  BinaryMask mask(w, h);
  if (options_.sam_mode == MockOptions::SamMode::kRectangle) {
    // Pixel (x, y) is inside when x0 <= x < x1.
    const auto lo = [](double v, int n) { return std::clamp(static_cast<int>(std::ceil(v)), 0, n); };
    const int xa = lo(req.box[0], w), xb = lo(req.box[2], w);
    const int ya = lo(req.box[1], h), yb = lo(req.box[3], h);
    for (int y = ya; y < yb; ++y)
      for (int x = xa; x < xb; ++x) mask.set(x, y);
  } else {
    const AnnotationRecord& rec = find_record(ext.image_id, ext.task);
    const auto gt = ground_truth(rec);
    check_erp_dims(*ext.frame, *gt);
    mask = project_ground_truth(*gt, *ext.frame);
  }
  return wire::to_json(wire::SamResponse{io::base64_encode(io::encode_png(mask_to_image(mask)))});
}

HttpReply OracleMock::handle(const std::string& method, const std::string& path, const std::string& body) const {
  try {
    if (method == "GET" && path == wire::kHealthPath) {
      return json_reply(200, {{"ok", true}, {"model", "pap-oracle-mock"}, {"wire", wire::kVersion}});
    }
    if (method != "POST") return json_reply(405, {{"error", "MethodNotAllowed"}, {"message", method + " " + path}});
    wire::json request;
    try {
      request = wire::json::parse(body);
    } catch (const wire::json::parse_error& e) {
      throw Error(ErrorCode::kSchemaViolation, std::string("body is not JSON: ") + e.what());
    }
    if (path == wire::kVlmPath) return json_reply(200, complete(request));
    if (path == wire::kOvdPath) return json_reply(200, detect(request));
    if (path == wire::kSamPath) return json_reply(200, segment(request));
    return json_reply(404, {{"error", "NotFound"}, {"message", path}});
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSchemaViolation || e.code() == ErrorCode::kInvalidSpec ||
        e.code() == ErrorCode::kGridTooDense) {
      return error_reply(422, e);
    }
    if (e.code() == ErrorCode::kUnknownImage) return error_reply(404, e);
    return error_reply(500, e);
  } catch (const std::exception& e) {
    return json_reply(500, {{"error", "Internal"}, {"message", e.what()}});
  }
}

std::shared_ptr<Transport> make_mock_transport(const std::string& url) {
  static std::mutex registry_mutex;
  static std::map<std::string, std::weak_ptr<OracleMock>> registry;
  fs::path dir;
  const MockOptions opts = parse_mock_url(url, dir);
  std::shared_ptr<OracleMock> mock;
  {
    std::lock_guard lock(registry_mutex);
    mock = registry[url].lock();
    if (!mock) {
      mock = std::make_shared<OracleMock>(dir, opts);
      registry[url] = mock;
    }
  }
  return make_in_process_transport(
      [mock](const std::string& method, const std::string& path, const std::string& body) {
        return mock->handle(method, path, body);
      },
      url);
}

struct MockServer::Impl {
  OracleMock mock;
  httplib::Server server;
  std::thread thread;

  Impl(fs::path dir, MockOptions opts) : mock(std::move(dir), opts) {
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
      const HttpReply r = mock.handle(req.method, req.path, req.body);
      res.status = r.status;
      res.set_content(r.body, "application/json");
    };
    server.Get(wire::kHealthPath, route);
    server.Post(wire::kVlmPath, route);
    server.Post(wire::kOvdPath, route);
    server.Post(wire::kSamPath, route);
    server.set_payload_max_length(512ull << 20);
  }
};

MockServer::MockServer(fs::path dataset_dir, MockOptions options)
    : impl_(std::make_unique<Impl>(std::move(dataset_dir), options)) {}

MockServer::~MockServer() { stop(); }

int MockServer::start(const std::string& host, int port) {
  port_ = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw Error(ErrorCode::kIoError, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void MockServer::run(const std::string& host, int port) {
  port_ = port;
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::kIoError, "cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->server.listen_after_bind();
}

void MockServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace pap
