#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "gfss/fewshot/class_split.hpp"
#include "gfss/numcore/label_map.hpp"

namespace gfss::eval {

using num::LabelMap;

/// counts[truth][pred] over class ids 0..size-1.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0) : n_(classes), counts_(classes * classes, 0) {}

  std::size_t size() const { return n_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * n_ + pred]; }
  std::uint64_t total() const;

  /// Pixels whose truth is `ignore_id` are skipped.
  void accumulate(const LabelMap& predicted, const LabelMap& truth, int ignore_id = num::kIgnoreId);
  void merge(const ConfusionMatrix& other);

  std::uint64_t true_positives(std::size_t c) const { return at(c, c); }
  std::uint64_t false_positives(std::size_t c) const;
  std::uint64_t false_negatives(std::size_t c) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

/// TP/(TP+FP+FN), or nullopt when the class never occurs in truth or prediction.
std::optional<double> iou(const ConfusionMatrix& conf, std::size_t class_id);

/// Mean IoU over the measurable classes among `class_ids`.
/// Throws std::invalid_argument("no measurable classes") if none are.
double miou(const ConfusionMatrix& conf, std::span<const std::uint8_t> class_ids);

struct RunMetrics {
  double base_miou = 0.0;
  double novel_miou = 0.0;
  std::map<std::uint8_t, double> class_iou;  // measurable classes only
};

/// Background is excluded from both groups.
RunMetrics run_metrics(const ConfusionMatrix& conf, const fewshot::ClassSplit& split);

struct MetricsReport {
  std::map<std::uint8_t, double> class_iou;  // averaged over the runs where the class was measurable
  double base_miou = 0.0;
  double novel_miou = 0.0;
  double mean = 0.0;  // (base + novel) / 2
  std::size_t run_count = 0;
  std::vector<RunMetrics> runs;
};

MetricsReport aggregate_runs(std::span<const RunMetrics> runs);

}  // namespace gfss::eval
