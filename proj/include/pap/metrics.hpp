#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pap/dataset.hpp"
#include "pap/image.hpp"

namespace pap {

struct Overlap {
  std::uint64_t inter = 0;
  std::uint64_t uni = 0;
  double iou = 0.0;
};

/// Intersection, union and IoU of two masks of equal size. Two empty masks
/// score 1. Throws DimensionMismatch.
Overlap overlap(const BinaryMask& a, const BinaryMask& b);
double iou(const BinaryMask& a, const BinaryMask& b);

struct SampleScore {
  std::string id;
  std::uint64_t inter = 0;
  std::uint64_t uni = 0;
  double iou = 0.0;
  std::optional<Difficulty> subset;
};

struct SubsetMetrics {
  std::size_t n = 0;
  double giou = 0.0;
  double ciou = 0.0;
  double p50 = 0.0;
  double p50_95 = 0.0;
};

struct MetricReport {
  std::size_t n = 0;
  double giou = 0.0;
  double ciou = 0.0;
  double p50 = 0.0;
  double p50_95 = 0.0;
  std::map<std::string, SubsetMetrics> subsets;  // keyed "hard" / "normal"
  std::vector<SampleScore> samples;
};

/// Thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> iou_thresholds();
/// Fraction of IoUs strictly above t.
double precision_at(std::span<const SampleScore> samples, double t);

/// gIoU = mean IoU, cIoU = sum inter / sum union (1 when every union is
/// empty), P@50 and the mean precision over iou_thresholds(). Thresholds
/// compare with strict '>'. Throws EmptyEvaluation.
SubsetMetrics summarize(std::span<const SampleScore> samples);
/// Overall and per-subset metrics; samples keep their input order.
MetricReport aggregate(std::vector<SampleScore> samples);

/// Hard iff area > 30% or < 0.1% of the image, or set pixels in both the
/// first and the last column.
Difficulty classify_difficulty(const BinaryMask& gt);

nlohmann::json to_json(const SubsetMetrics& m);
nlohmann::json to_json(const MetricReport& r);

}  // namespace pap
