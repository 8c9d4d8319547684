// pap: command-line front end for the panoramic affordance pipeline.
//
// Exit codes: 0 ok, 1 usage / IO / validation, 2 grounding failure,
// 3 backend failure, 4 dataset format error.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "pap/config.hpp"
#include "pap/error.hpp"
#include "pap/evaluate.hpp"
#include "pap/geometry.hpp"
#include "pap/image_io.hpp"
#include "pap/mock.hpp"
#include "pap/pipeline.hpp"
#include "pap/synthetic.hpp"

namespace fs = std::filesystem;
using namespace pap;

namespace {

enum Exit { kOk = 0, kUsage = 1, kGrounding = 2, kBackend = 3, kDataset = 4 };

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kGroundingFailed:
    case ErrorCode::kNoDetection:
    case ErrorCode::kUnparseableResponse:
    case ErrorCode::kEmptyGridBoxes:
    case ErrorCode::kBadIndex:
    case ErrorCode::kDegenerateRegion:
      return kGrounding;
    case ErrorCode::kBackendError:
    case ErrorCode::kTimeout:
    case ErrorCode::kMaskDimMismatch:
    case ErrorCode::kSchemaViolation:
    case ErrorCode::kUnknownImage:
      return kBackend;
    case ErrorCode::kDatasetFormatError:
      return kDataset;
    default:
      return kUsage;
  }
}

struct BackendFlags {
  std::string config;
  std::string endpoint;
  int workers = -1;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON config file");
    cmd->add_option("--endpoint", endpoint, "Base URL for all three backends (http://host:port or mock://<dir>)");
  }

  AppConfig load() const {
    AppConfig cfg = config.empty() ? AppConfig{} : load_config(config);
    if (!endpoint.empty()) cfg.set_endpoint(endpoint);
    if (workers >= 0) cfg.workers = workers;
    cfg.validate();
    return cfg;
  }
};

Backends connect(const AppConfig& cfg) { return Backends::connect(cfg.vlm, cfg.ovd, cfg.sam); }

Image read_input(const std::string& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kIoError, "no such file: " + path);
  return io::read_image(path);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

int predict(const std::string& image_path, const std::string& task, const BackendFlags& flags, const std::string& out,
            const std::string& debug_dir, std::string image_id) {
  const AppConfig cfg = flags.load();
  const Image erp = read_input(image_path);
  if (image_id.empty()) image_id = fs::path(image_path).filename().string();
  const PipelineResult result = run_pipeline(erp, task, connect(cfg), cfg.pipeline, RequestContext{image_id});
  ensure_parent(out);
  io::write_mask(out, result.mask_erp);

  if (!debug_dir.empty()) {
    const fs::path d(debug_dir);
    fs::create_directories(d);
    io::write_png(d / "overlay.png", result.routing->state.overlay);
    io::write_png(d / "viewport.png", result.view_image);
    io::write_mask(d / "mask_persp.png", result.mask_persp);
    nlohmann::json spec = view_to_json(*result.view);
    spec["detection_query"] = result.detection_query;
    if (result.detection) {
      spec["detection"] = {{"box", result.detection->box},
                           {"points", result.detection->points},
                           {"score", result.detection->score},
                           {"label", result.detection->label}};
    }
    write_json(d / "spec.json", spec);
    write_json(d / "routing.json", routing_to_json(*result.routing));
  }
  std::cout << "wrote " << out << " (" << result.mask_erp.area() << " px)\n";
  return kOk;
}

int evaluate(const std::string& dataset, const BackendFlags& flags, const std::string& report,
             const std::string& subset) {
  const AppConfig cfg = flags.load();
  EvalOptions opts;
  opts.workers = cfg.workers;
  if (!subset.empty()) opts.subset = difficulty_from_string(subset);
  const Evaluation e = evaluate_dataset(dataset, connect(cfg), cfg.pipeline, opts);
  write_evaluation(report, e);
  std::size_t failed = 0;
  for (const auto& s : e.samples) failed += !s.ok;
  std::printf("n=%zu gIoU=%.4f cIoU=%.4f P@50=%.4f P@50:95=%.4f failed=%zu\n", e.report.n, e.report.giou,
              e.report.ciou, e.report.p50, e.report.p50_95, failed);
  return kOk;
}

int viewport(const std::string& image, const ViewportSpec& spec, const std::string& out) {
  spec.validate();
  const Image erp = read_input(image);
  ensure_parent(out);
  io::write_png(out, extract_viewport(erp, spec));
  return kOk;
}

int grid(const std::string& image, const GridSpec& g, const std::string& out) {
  g.validate();
  const Image img = read_input(image);
  ensure_parent(out);
  io::write_png(out, render_grid_overlay(img, g));
  return kOk;
}

MockServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int mock_serve(const std::string& dataset, const std::string& host, int port, const MockOptions& opts) {
  MockServer server(dataset, opts);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "serving pap-wire/1 oracle for " << dataset << " on " << host << ":" << port << std::endl;
  server.run(host, port);
  g_server = nullptr;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Panoramic affordance prediction"};
  app.require_subcommand(1);

  BackendFlags predict_flags, eval_flags;
  std::string image, task, out, debug_dir, image_id, dataset, report, subset;

  auto* p = app.add_subcommand("predict", "Ground a task in one panorama and write the ERP mask");
  p->add_option("--image", image, "Equirectangular image")->required();
  p->add_option("--task", task, "Task instruction")->required();
  p->add_option("--out", out, "Output mask PNG")->required();
  p->add_option("--debug-dir", debug_dir, "Write overlay, viewport, mask_persp, spec and routing artifacts");
  p->add_option("--image-id", image_id, "Identifier sent to the backends (default: image file name)");
  predict_flags.add(p);

  auto* e = app.add_subcommand("evaluate", "Run the pipeline over a dataset and report metrics");
  e->add_option("--dataset", dataset, "Dataset directory with annotations.jsonl")->required();
  e->add_option("--report", report, "Output directory for report.json and per_sample.csv")->required();
  e->add_option("--subset", subset, "Only evaluate hard or normal records")->check(CLI::IsMember({"hard", "normal"}));
  e->add_option("--workers", eval_flags.workers, "Concurrent samples (0 = hardware threads)")->check(CLI::NonNegativeNumber);
  eval_flags.add(e);

  ViewportSpec spec;
  auto* v = app.add_subcommand("viewport", "Extract a rectilinear view");
  v->add_option("--image", image, "Equirectangular image")->required();
  v->add_option("--yaw", spec.yaw_deg, "Yaw in degrees")->required();
  v->add_option("--pitch", spec.pitch_deg, "Pitch in degrees, positive looks down")->required();
  v->add_option("--fov", spec.hfov_deg, "Horizontal field of view in degrees")->required();
  v->add_option("--width", spec.out_width_px, "Output width")->required();
  v->add_option("--height", spec.out_height_px, "Output height")->required();
  v->add_option("--out", out, "Output PNG")->required();

  GridSpec g;
  auto* gr = app.add_subcommand("grid", "Draw the numbered routing grid");
  gr->add_option("--image", image, "Input image")->required();
  gr->add_option("--cols", g.cols, "Columns")->capture_default_str();
  gr->add_option("--rows", g.rows, "Rows")->capture_default_str();
  gr->add_option("--line-width", g.line_width_px, "Line width in pixels")->capture_default_str();
  gr->add_option("--font-size", g.font_size_px, "Label height in pixels")->capture_default_str();
  gr->add_option("--out", out, "Output PNG")->required();

  auto* s = app.add_subcommand("split", "Split a dataset into hard and normal subsets");
  s->add_option("--dataset", dataset, "Dataset directory")->required();
  s->add_option("--out", out, "Output directory")->required();

  std::string host = "127.0.0.1";
  int port = 8080;
  MockOptions mock;
  std::string sam_mode = "oracle";
  auto* m = app.add_subcommand("mock-serve", "Serve oracle backends for a dataset over HTTP");
  m->add_option("--dataset", dataset, "Dataset directory")->required();
  m->add_option("--host", host, "Bind address")->capture_default_str();
  m->add_option("--port", port, "Port")->capture_default_str();
  m->add_option("--noise-p", mock.grid_noise_p, "Probability of moving each grid cell")->check(CLI::Range(0.0, 1.0));
  m->add_option("--jitter", mock.jitter_px, "Detector box jitter in pixels")->check(CLI::NonNegativeNumber);
  m->add_option("--sam", sam_mode, "Segmenter: oracle or rect")->check(CLI::IsMember({"oracle", "rect"}));
  m->add_option("--seed", mock.seed, "Noise seed");

  int count = 30;
  std::uint64_t seed = 2024;
  auto* y = app.add_subcommand("synth", "Render a synthetic panorama dataset");
  y->add_option("--out", out, "Output directory")->required();
  y->add_option("--count", count, "Number of scenes")->capture_default_str();
  y->add_option("--seed", seed, "Scene seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? kOk : kUsage;
  }

  try {
    if (p->parsed()) return predict(image, task, predict_flags, out, debug_dir, image_id);
    if (e->parsed()) return evaluate(dataset, eval_flags, report, subset);
    if (v->parsed()) return viewport(image, spec, out);
    if (gr->parsed()) return grid(image, g, out);
    if (s->parsed()) {
      const SplitCounts c = split_dataset(dataset, out);
      std::printf("hard=%zu normal=%zu\n", c.hard, c.normal);
      return kOk;
    }
    if (m->parsed()) {
      mock.sam_mode = sam_mode == "rect" ? MockOptions::SamMode::kRectangle : MockOptions::SamMode::kOracle;
      return mock_serve(dataset, host, port, mock);
    }
    if (y->parsed()) {
      const auto recs = write_synthetic_dataset(out, make_synthetic_scenes(count, seed));
      std::printf("wrote %zu scenes to %s\n", recs.size(), out.c_str());
      return kOk;
    }
  } catch (const Error& err) {
    std::cerr << "pap: " << err.what() << '\n';
    return exit_code_for(err.code());
  } catch (const std::exception& err) {
    std::cerr << "pap: " << err.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
