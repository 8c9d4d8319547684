#include "pap/metrics.hpp"

#include "pap/error.hpp"

namespace pap {

Overlap overlap(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "masks differ in size: " + std::to_string(a.width()) + "x" +
                                                   std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                                                   "x" + std::to_string(b.height()));
  }
  Overlap o;
  const auto ab = a.bits(), bb = b.bits();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    o.inter += (ab[i] & bb[i]);
    o.uni += (ab[i] | bb[i]);
  }
  o.iou = o.uni == 0 ? 1.0 : static_cast<double>(o.inter) / static_cast<double>(o.uni);
  return o;
}

double iou(const BinaryMask& a, const BinaryMask& b) { return overlap(a, b).iou; }

std::vector<double> iou_thresholds() {
  std::vector<double> t;
  for (int k = 50; k <= 95; k += 5) t.push_back(k / 100.0);
  return t;
}

double precision_at(std::span<const SampleScore> samples, double t) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyEvaluation, "no samples");
  std::size_t hits = 0;
  for (const auto& s : samples) hits += s.iou > t ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

SubsetMetrics summarize(std::span<const SampleScore> samples) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyEvaluation, "no samples to aggregate");
  SubsetMetrics m;
  m.n = samples.size();
  double sum_iou = 0.0;
  std::uint64_t sum_inter = 0, sum_union = 0;
  for (const auto& s : samples) {
    sum_iou += s.iou;
    sum_inter += s.inter;
    sum_union += s.uni;
  }
  m.giou = sum_iou / static_cast<double>(m.n);
  m.ciou = sum_union == 0 ? 1.0 : static_cast<double>(sum_inter) / static_cast<double>(sum_union);
  m.p50 = precision_at(samples, 0.5);
  const auto ts = iou_thresholds();
  double acc = 0.0;
  for (double t : ts) acc += precision_at(samples, t);
  m.p50_95 = acc / static_cast<double>(ts.size());
  return m;
}

MetricReport aggregate(std::vector<SampleScore> samples) {
  const SubsetMetrics all = summarize(samples);
  MetricReport r;
  r.n = all.n;
  r.giou = all.giou;
  r.ciou = all.ciou;
  r.p50 = all.p50;
  r.p50_95 = all.p50_95;
  for (Difficulty d : {Difficulty::kHard, Difficulty::kNormal}) {
    std::vector<SampleScore> part;
    for (const auto& s : samples) {
      if (s.subset == d) part.push_back(s);
    }
    if (!part.empty()) r.subsets.emplace(std::string(to_string(d)), summarize(part));
  }
  r.samples = std::move(samples);
  return r;
}

Difficulty classify_difficulty(const BinaryMask& gt) {
  const double total = static_cast<double>(gt.width()) * gt.height();
  const double frac = total > 0 ? static_cast<double>(gt.area()) / total : 0.0;
  if (frac > 0.30 || frac < 0.001) return Difficulty::kHard;
  if (gt.width() > 0 && gt.any_in_column(0) && gt.any_in_column(gt.width() - 1)) return Difficulty::kHard;
  return Difficulty::kNormal;
}

nlohmann::json to_json(const SubsetMetrics& m) {
  return {{"n", m.n}, {"giou", m.giou}, {"ciou", m.ciou}, {"p50", m.p50}, {"p50_95", m.p50_95}};
}

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j = {{"n", r.n}, {"giou", r.giou}, {"ciou", r.ciou}, {"p50", r.p50}, {"p50_95", r.p50_95}};
  j["subsets"] = nlohmann::json::object();
  for (const auto& [name, m] : r.subsets) j["subsets"][name] = to_json(m);
  j["per_sample"] = nlohmann::json::array();
  for (const auto& s : r.samples) {
    nlohmann::json e = {{"id", s.id}, {"iou", s.iou}, {"inter", s.inter}, {"union", s.uni}};
    e["subset"] = s.subset ? nlohmann::json(std::string(to_string(*s.subset))) : nlohmann::json(nullptr);
    j["per_sample"].push_back(std::move(e));
  }
  return j;
}

}  // namespace pap
