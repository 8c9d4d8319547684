#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pap/metrics.hpp"
#include "pap/pipeline.hpp"

namespace pap {

struct EvalOptions {
  /// Concurrent pipelines; 0 means one per hardware thread.
  int workers = 0;
  /// Only evaluate records of this difficulty.
  std::optional<Difficulty> subset;
};

struct SampleOutcome {
  SampleScore score;
  bool ok = false;
  std::string error;  // empty on success
  std::map<std::string, double> timings_ms;
};

struct Evaluation {
  MetricReport report;
  std::vector<SampleOutcome> samples;  // sorted by id
};

/// Runs the pipeline on every record of `<dataset_dir>/annotations.jsonl`.
/// Failed samples score IoU 0 against their ground truth. Subsets come from
/// classify_difficulty on the ground-truth mask. Throws DatasetFormatError
/// for unreadable or mis-sized inputs.
Evaluation evaluate_dataset(const std::filesystem::path& dataset_dir, const Backends& backends,
                            const PipelineConfig& cfg, const EvalOptions& options = {});

/// Writes report.json and per_sample.csv into `out_dir`.
void write_evaluation(const std::filesystem::path& out_dir, const Evaluation& eval);

/// Records split by classify_difficulty, written as hard/ and normal/
/// annotation files that point back at the original images and masks.
struct SplitCounts {
  std::size_t hard = 0;
  std::size_t normal = 0;
};
SplitCounts split_dataset(const std::filesystem::path& dataset_dir, const std::filesystem::path& out_dir);

}  // namespace pap
