// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "pap/error.hpp"
#include "pap/evaluate.hpp"
#include "pap/geometry.hpp"
#include "pap/grid.hpp"
#include "pap/metrics.hpp"
#include "pap/pipeline.hpp"
#include "pap/synthetic.hpp"
#include "support.hpp"

using namespace pap;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Verdict()>& check) {
  Verdict v;
  const auto t0 = Clock::now();
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  failures += !v.pass;
  std::printf("%s %-22s %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ViewportSpec random_spec(std::mt19937_64& rng, double max_hfov = 150) {
  std::uniform_real_distribution<double> yaw(-180, 180), pitch(-80, 80), hfov(20, max_hfov);
  std::uniform_int_distribution<int> side(32, 400);
  return {yaw(rng), pitch(rng), hfov(rng), side(rng), side(rng)};
}

Image textured_erp(int W, int H) {
  Image erp(W, H, 3);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const double lon = 2 * kPi * x / W, lat = kPi * y / H;
      erp.at(x, y, 0) = static_cast<std::uint8_t>(127 + 100 * std::sin(3 * lon) * std::sin(2 * lat));
      erp.at(x, y, 1) = static_cast<std::uint8_t>(127 + 100 * std::cos(5 * lon + lat));
      erp.at(x, y, 2) = static_cast<std::uint8_t>((x * 13 + y * 7) % 256);
    }
  return erp;
}

Verdict projection_round_trip() {
  std::mt19937_64 rng(1);
  const ErpDims erp{4000, 2000};
  double worst = 0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 10000; ++i) {
    const ViewportSpec s = random_spec(rng, 170);
    std::uniform_real_distribution<double> px(-0.5, s.out_width_px - 0.5), py(-0.5, s.out_height_px - 0.5);
    const double x = px(rng), y = py(rng);
    const ErpPoint e = viewport_to_erp(x, y, s, erp);
    const auto back = erp_to_viewport(e.u, e.v, s, erp);
    if (!back) return {false, fmt("pair %d fell behind the camera", i)};
    worst = std::max(worst, std::hypot(back->x - x, back->y - y));
  }
  const double t = seconds_since(t0);
  return {worst < 1e-6 && t < 5.0, fmt("10000 pairs, max error %.3g px, %.3f s", worst, t)};
}

Verdict roll_equivalence() {
  std::mt19937_64 rng(2);
  const int W = 1200, H = 600;
  const Image erp = textured_erp(W, H);
  std::size_t total = 0, close = 0;
  for (int i = 0; i < 50; ++i) {
    ViewportSpec s = random_spec(rng);
    const int shift = std::uniform_int_distribution<int>(-W + 1, W - 1)(rng);
    s.yaw_deg = shift * 360.0 / W;
    const Image a = extract_viewport(erp, s);
    ViewportSpec zero = s;
    zero.yaw_deg = 0.0;
    const Image b = extract_viewport(roll_columns(erp, shift), zero);
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        bool ok = true;
        for (int c = 0; c < 3; ++c) ok &= std::abs(a.at(x, y, c) - b.at(x, y, c)) <= 1;
        close += ok;
        ++total;
      }
  }
  const double frac = static_cast<double>(close) / static_cast<double>(total);
  return {frac >= 0.999, fmt("50 specs, %.5f%% of pixels within 1 level", 100 * frac)};
}

Verdict footprint_identity() {
  std::mt19937_64 rng(3);
  const ErpDims erp{1000, 500};
  std::vector<ViewportSpec> specs;
  specs.push_back({178, 5, 60, 200, 150});   // crosses the seam
  specs.push_back({30, 75, 70, 200, 200});   // contains the north pole
  specs.push_back({-90, -82, 40, 120, 90});  // near the south pole
  while (specs.size() < 20) specs.push_back(random_spec(rng));
  int identical = 0;
  for (const auto& s : specs) {
    BinaryMask m(s.out_width_px, s.out_height_px);
    std::bernoulli_distribution bit(0.3);
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        if (bit(rng)) m.set(x, y);
    identical += reproject_mask_to_erp(m, s, erp, ScanMode::kRestricted) ==
                 reproject_mask_to_erp(m, s, erp, ScanMode::kFull);
  }
  return {identical == 20, fmt("%d/20 specs bit-exact (seam and pole cases included)", identical)};
}

Verdict solid_angle() {
  std::mt19937_64 rng(4);
  const ErpDims erp{2000, 1000};
  std::normal_distribution<double> g;
  double worst = 0;
  int checked = 0;
  while (checked < 5) {
    const ViewportSpec s = random_spec(rng, 120);
    if (std::abs(s.pitch_deg) + s.vfov_deg() / 2 >= 80) continue;
    const BinaryMask fp = reproject_mask_to_erp(BinaryMask(s.out_width_px, s.out_height_px, true), s, erp);
    double footprint = 0;
    for (int v = 0; v < erp.height; ++v) {
      const double w = std::cos(kPi * ((v + 0.5) / erp.height - 0.5)) * (2 * kPi / erp.width) * (kPi / erp.height);
      const std::uint8_t* row = fp.row(v);
      for (int u = 0; u < erp.width; ++u) footprint += row[u] * w;
    }
    std::size_t inside = 0;
    const int samples = 1000000;
    for (int i = 0; i < samples; ++i) {
      const WorldRay r{g(rng), g(rng), g(rng)};
      const SphericalCoord sc = spherical_from_ray(r);
      const ErpPoint e = erp_pixel_from_spherical(sc, erp);
      const auto p = erp_to_viewport(e.u, e.v, s, erp);
      inside += p && p->x >= -0.5 && p->x < s.out_width_px - 0.5 && p->y >= -0.5 && p->y < s.out_height_px - 0.5;
    }
    const double frustum = 4 * kPi * static_cast<double>(inside) / samples;
    worst = std::max(worst, std::abs(footprint - frustum) / frustum);
    ++checked;
  }
  return {worst < 0.02, fmt("5 specs x 1e6 samples, worst relative difference %.3f%%", 100 * worst)};
}

Verdict grid_tiling() {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 500; ++t) {
    const GridSpec g{1 + static_cast<int>(rng() % 8), 1 + static_cast<int>(rng() % 6), 5, 50};
    const int w = g.cols + static_cast<int>(rng() % 600), h = g.rows + static_cast<int>(rng() % 400);
    std::vector<std::uint8_t> hits(static_cast<std::size_t>(w) * h, 0);
    for (int i = 1; i <= g.cell_count(); ++i) {
      const CropRegion r = cell_region(i, g, w, h);
      for (int y = r.y0; y < r.y0 + r.height; ++y)
        for (int x = r.x0; x < r.x0 + r.width; ++x) ++hits[static_cast<std::size_t>(y) * w + x];
    }
    if (std::any_of(hits.begin(), hits.end(), [](std::uint8_t v) { return v != 1; })) {
      return {false, fmt("case %d (%dx%d, %dx%d grid) is not a partition", t, w, h, g.cols, g.rows)};
    }
  }
  return {true, "500 random frames x grids partition exactly"};
}

// Shared 30-scene synthetic set for the end-to-end criteria.
struct SyntheticSet {
  test::TempDir dir;
  std::vector<SyntheticScene> scenes = make_synthetic_scenes(30, 2024);
  std::vector<AnnotationRecord> records = write_synthetic_dataset(dir.path(), scenes);

  Backends backends(const std::string& query = "") const {
    const std::string url = "mock://" + dir.path().string() + query;
    return Backends::connect(test::backend_config(BackendKind::kVlm, url),
                             test::backend_config(BackendKind::kOvd, url),
                             test::backend_config(BackendKind::kSam, url));
  }
};

struct EndToEnd {
  std::vector<PipelineResult> results;
  std::vector<double> ious;
  double seconds = 0;
};

EndToEnd run_all(const SyntheticSet& set, const Backends& b, const PipelineConfig& cfg) {
  EndToEnd out;
  const auto t0 = Clock::now();
  for (const auto& rec : set.records) {
    const Image erp = io::read_image(set.dir.path() / rec.image_path);
    out.results.push_back(run_pipeline(erp, rec.question, b, cfg, RequestContext{rec.id}));
    out.ious.push_back(iou(out.results.back().mask_erp, io::read_mask(set.dir.path() / rec.mask_path)));
  }
  out.seconds = seconds_since(t0);
  return out;
}

}  // namespace

int main() {
  report("projection-round-trip", projection_round_trip);
  report("roll-equivalence", roll_equivalence);
  report("footprint-identity", footprint_identity);
  report("solid-angle", solid_angle);
  report("grid-tiling", grid_tiling);

  const SyntheticSet set;
  EndToEnd oracle;
  report("end-to-end-oracle", [&]() -> Verdict {
    oracle = run_all(set, set.backends(), {});
    int seam = 0, small = 0, seam_ok = 0;
    double min_iou = 1, sum = 0;
    for (std::size_t i = 0; i < set.scenes.size(); ++i) {
      min_iou = std::min(min_iou, oracle.ious[i]);
      sum += oracle.ious[i];
      small += set.scenes[i].kind == SceneKind::kSmall;
      if (set.scenes[i].kind == SceneKind::kSeam) {
        ++seam;
        seam_ok += connected_components(oracle.results[i].mask_erp, true) == 1;
      }
    }
    const double giou = sum / static_cast<double>(set.scenes.size());
    const bool pass = min_iou >= 0.95 && giou >= 0.95 && seam >= 5 && small >= 5 && seam_ok == seam &&
                      oracle.seconds < 120;
    return {pass, fmt("30 scenes (%d seam, %d small), gIoU %.4f, min IoU %.4f, seam single-component %d/%d, %.1f s",
                      seam, small, giou, min_iou, seam_ok, seam, oracle.seconds)};
  });

  report("recursion-behaviour", [&]() -> Verdict {
    if (oracle.results.size() != set.scenes.size()) return {false, "end-to-end run did not complete"};
    int small_ok = 0, small_n = 0, multi_ok = 0, multi_n = 0;
    for (std::size_t i = 0; i < set.scenes.size(); ++i) {
      const RoutingOutcome& r = *oracle.results[i].routing;
      if (set.scenes[i].kind == SceneKind::kSmall) {
        ++small_n;
        small_ok += r.state.depth == 1 && r.state.history.size() == 2 && r.state.history[0].result.small;
      } else if (r.state.history.front().result.grid_boxes.size() >= 2) {
        ++multi_n;
        multi_ok += r.state.depth == 0 && r.state.history.size() == 1;
      }
    }
    return {small_ok == small_n && multi_ok == multi_n && small_n >= 5 && multi_n >= 1,
            fmt("small targets at depth 1: %d/%d, multi-cell targets at depth 0: %d/%d", small_ok, small_n, multi_ok,
                multi_n)};
  });

  report("ablation-adaptive-gaze", [&]() -> Verdict {
    const Backends rect = set.backends("?sam=rect");
    PipelineConfig raw;
    raw.adaptive_gaze = false;
    const EndToEnd with = run_all(set, rect, {});
    const EndToEnd without = run_all(set, rect, raw);
    double a = 0, b = 0;
    for (double v : with.ious) a += v;
    for (double v : without.ious) b += v;
    a /= static_cast<double>(with.ious.size());
    b /= static_cast<double>(without.ious.size());
    return {a > b, fmt("rectangle segmenter: gIoU with gaze %.4f, raw ERP crop %.4f", a, b)};
  });

  report("metric-oracle", []() -> Verdict {
    std::mt19937_64 rng(6);
    std::vector<SampleScore> s;
    for (int i = 0; i < 1000; ++i) {
      const std::uint64_t uni = rng() % 5000;
      const std::uint64_t inter = uni == 0 ? 0 : rng() % (uni + 1);
      const double v = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
      s.push_back({"s" + std::to_string(i), inter, uni, v, rng() % 2 ? Difficulty::kHard : Difficulty::kNormal});
    }
    double giou = 0, si = 0, su = 0, p50 = 0, p5095 = 0;
    for (const auto& x : s) {
      giou += x.iou;
      si += static_cast<double>(x.inter);
      su += static_cast<double>(x.uni);
      p50 += x.iou > 0.5;
      for (int k = 50; k <= 95; k += 5) p5095 += x.iou > k / 100.0;
    }
    const double n = static_cast<double>(s.size());
    const MetricReport r = aggregate(s);
    const double err = std::max({std::abs(r.giou - giou / n), std::abs(r.ciou - si / su), std::abs(r.p50 - p50 / n),
                                 std::abs(r.p50_95 - p5095 / (10 * n))});
    const double strict = summarize(std::vector<SampleScore>{{"x", 7, 10, 0.7, std::nullopt}}).p50_95;
    return {err <= 1e-12 && strict == 0.4,
            fmt("1000 tuples, max deviation %.2g; single IoU 0.7 gives P@50:95 %.2f", err, strict)};
  });

  report("hard-normal-split", []() -> Verdict {
    test::TempDir dir;
    const auto expected = test::write_split_fixture(dir.path());
    int correct = 0;
    for (const auto& rec : load_annotations(dir.path())) {
      correct += classify_difficulty(io::read_mask(dir.path() / rec.mask_path)) == expected.at(rec.id);
    }
    return {correct == 9, fmt("%d/9 records classified as labelled", correct)};
  });

  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
