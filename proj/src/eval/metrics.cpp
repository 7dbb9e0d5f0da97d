#include "gfss/eval/metrics.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace gfss::eval {

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

void ConfusionMatrix::accumulate(const LabelMap& predicted, const LabelMap& truth, int ignore_id) {
  if (predicted.height != truth.height || predicted.width != truth.width || predicted.size() != truth.size())
    throw std::invalid_argument("prediction and truth geometry differ");
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth.ids[i];
    if (t == ignore_id) continue;
    const std::size_t p = predicted.ids[i];
    if (static_cast<std::size_t>(t) >= n_ || p >= n_)
      throw std::out_of_range("label outside confusion matrix of size " + std::to_string(n_));
    ++counts_[static_cast<std::size_t>(t) * n_ + p];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw std::invalid_argument("confusion matrix sizes differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::false_positives(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t t = 0; t < n_; ++t)
    if (t != c) s += at(t, c);
  return s;
}

std::uint64_t ConfusionMatrix::false_negatives(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < n_; ++p)
    if (p != c) s += at(c, p);
  return s;
}

std::optional<double> iou(const ConfusionMatrix& conf, std::size_t c) {
  if (c >= conf.size()) throw std::out_of_range("class " + std::to_string(c) + " outside confusion matrix");
  const std::uint64_t tp = conf.true_positives(c);
  const std::uint64_t denom = tp + conf.false_positives(c) + conf.false_negatives(c);
  if (denom == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(denom);
}

double miou(const ConfusionMatrix& conf, std::span<const std::uint8_t> class_ids) {
  if (class_ids.empty()) throw std::invalid_argument("class_ids must not be empty");
  double sum = 0.0;
  std::size_t n = 0;
  for (auto c : class_ids) {
    if (auto v = iou(conf, c)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("no measurable classes");
  return sum / static_cast<double>(n);
}

RunMetrics run_metrics(const ConfusionMatrix& conf, const fewshot::ClassSplit& split) {
  RunMetrics out;
  out.base_miou = miou(conf, split.base_ids());
  out.novel_miou = miou(conf, split.novel_ids());
  for (std::size_t c = 0; c < conf.size(); ++c)
    if (auto v = iou(conf, c)) out.class_iou[static_cast<std::uint8_t>(c)] = *v;
  return out;
}

MetricsReport aggregate_runs(std::span<const RunMetrics> runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate_runs needs at least one run");
  MetricsReport out;
  out.run_count = runs.size();
  out.runs.assign(runs.begin(), runs.end());
  std::map<std::uint8_t, std::pair<double, std::size_t>> acc;
  for (const auto& r : runs) {
    out.base_miou += r.base_miou;
    out.novel_miou += r.novel_miou;
    for (const auto& [c, v] : r.class_iou) {
      acc[c].first += v;
      acc[c].second += 1;
    }
  }
  out.base_miou /= static_cast<double>(runs.size());
  out.novel_miou /= static_cast<double>(runs.size());
  out.mean = (out.base_miou + out.novel_miou) / 2.0;
  for (const auto& [c, sn] : acc) out.class_iou[c] = sn.first / static_cast<double>(sn.second);
  return out;
}

}  // namespace gfss::eval
