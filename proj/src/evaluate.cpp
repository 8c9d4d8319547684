#include "pap/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "pap/error.hpp"
#include "pap/image_io.hpp"
#include "pap/parallel.hpp"

namespace pap {

namespace fs = std::filesystem;

namespace {

BinaryMask load_gt(const fs::path& dir, const AnnotationRecord& rec) {
  try {
    return io::read_mask(dir / rec.mask_path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kDatasetFormatError, "record '" + rec.id + "': cannot read mask: " + e.what());
  }
}

Image load_image(const fs::path& dir, const AnnotationRecord& rec) {
  try {
    return io::read_image(dir / rec.image_path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kDatasetFormatError, "record '" + rec.id + "': cannot read image: " + e.what());
  }
}

SampleOutcome evaluate_record(const fs::path& dir, const AnnotationRecord& rec, const BinaryMask& gt,
                              const Backends& backends, const PipelineConfig& cfg) {
  const Image erp = load_image(dir, rec);
  if (erp.width() != gt.width() || erp.height() != gt.height()) {
    throw Error(ErrorCode::kDatasetFormatError, "record '" + rec.id + "': mask size differs from image size");
  }
  SampleOutcome out;
  out.score.id = rec.id;
  out.score.subset = classify_difficulty(gt);
  try {
    const PipelineResult r = run_pipeline(erp, rec.question, backends, cfg, RequestContext{rec.id});
    const Overlap o = overlap(r.mask_erp, gt);
    out.score.inter = o.inter;
    out.score.uni = o.uni;
    out.score.iou = o.iou;
    out.timings_ms = r.timings_ms;
    out.ok = true;
  } catch (const PipelineError& e) {
    out.score.inter = 0;
    out.score.uni = gt.area();
    out.score.iou = 0.0;
    out.timings_ms = e.partial().timings_ms;
    out.error = e.what();
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

Evaluation evaluate_dataset(const fs::path& dataset_dir, const Backends& backends, const PipelineConfig& cfg,
                            const EvalOptions& options) {
  cfg.validate();
  std::vector<AnnotationRecord> records = load_annotations(dataset_dir);
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  std::vector<BinaryMask> gts;
  if (options.subset) {
    std::vector<AnnotationRecord> kept;
    for (auto& rec : records) {
      BinaryMask gt = load_gt(dataset_dir, rec);
      if (classify_difficulty(gt) != *options.subset) continue;
      kept.push_back(std::move(rec));
      gts.push_back(std::move(gt));
    }
    records = std::move(kept);
  }
  if (records.empty()) throw Error(ErrorCode::kEmptyEvaluation, "no records to evaluate");

  const int workers = std::max(1, std::min(options.workers > 0 ? options.workers : static_cast<int>(worker_threads()),
                                                static_cast<int>(records.size())));
  std::vector<SampleOutcome> outcomes(records.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= records.size()) return;
      try {
        const BinaryMask gt = gts.empty() ? load_gt(dataset_dir, records[i]) : gts[i];
        outcomes[i] = evaluate_record(dataset_dir, records[i], gt, backends, cfg);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = records.size();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  Evaluation eval;
  std::vector<SampleScore> scores;
  for (const auto& o : outcomes) scores.push_back(o.score);
  eval.report = aggregate(std::move(scores));
  eval.samples = std::move(outcomes);
  return eval;
}

void write_evaluation(const fs::path& out_dir, const Evaluation& eval) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + out_dir.string() + ": " + ec.message());

  nlohmann::json report = to_json(eval.report);
  for (std::size_t i = 0; i < eval.samples.size(); ++i) {
    report["per_sample"][i]["ok"] = eval.samples[i].ok;
    if (!eval.samples[i].ok) report["per_sample"][i]["error"] = eval.samples[i].error;
  }
  std::ofstream rj(out_dir / "report.json");
  rj << report.dump(2) << "\n";
  if (!rj) throw Error(ErrorCode::kIoError, "cannot write report.json");

  static const char* kStages[] = {"routing", "gaze", "detection", "segmentation", "reprojection"};
  std::ofstream csv(out_dir / "per_sample.csv");
  csv << "id,iou,subset,ok";
  for (const char* s : kStages) csv << "," << s << "_ms";
  csv << "\n";
  csv.precision(10);
  for (const auto& o : eval.samples) {
    csv << csv_field(o.score.id) << "," << o.score.iou << ","
        << (o.score.subset ? std::string(to_string(*o.score.subset)) : "") << "," << (o.ok ? 1 : 0);
    for (const char* s : kStages) {
      csv << ",";
      if (auto it = o.timings_ms.find(s); it != o.timings_ms.end()) csv << it->second;
    }
    csv << "\n";
  }
  if (!csv) throw Error(ErrorCode::kIoError, "cannot write per_sample.csv");
}

SplitCounts split_dataset(const fs::path& dataset_dir, const fs::path& out_dir) {
  const auto records = load_annotations(dataset_dir);
  std::vector<AnnotationRecord> hard, normal;
  const fs::path base = fs::absolute(dataset_dir);
  for (auto rec : records) {
    const Difficulty d = classify_difficulty(load_gt(dataset_dir, rec));
    rec.subset = d;
    rec.image_path = (base / rec.image_path).lexically_normal().string();
    rec.mask_path = (base / rec.mask_path).lexically_normal().string();
    (d == Difficulty::kHard ? hard : normal).push_back(std::move(rec));
  }
  for (const auto& [name, part] : {std::pair{"hard", &hard}, std::pair{"normal", &normal}}) {
    std::error_code ec;
    fs::create_directories(out_dir / name, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot create " + (out_dir / name).string());
    save_annotations(out_dir / name, *part);
  }
  return {hard.size(), normal.size()};
}

}  // namespace pap
