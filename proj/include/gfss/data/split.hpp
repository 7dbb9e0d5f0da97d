#pragma once

#include <cstdint>
#include <vector>

#include "gfss/data/dataset.hpp"
#include "gfss/fewshot/class_split.hpp"

namespace gfss::data {

struct SplitConfig {
  double holdout_fraction = 0.2;  // share of images reserved for the inference pool
  double val_fraction = 0.2;      // share of the remainder used for validation
  std::uint64_t seed = 7;

  void validate() const;
};

/// Disjoint partitions of a dataset. train/val have novel pixels relabeled to
/// background; pool keeps full masks. *_ids index the source dataset.
struct DataSplit {
  Dataset train, val, pool;
  std::vector<std::size_t> train_ids, val_ids, pool_ids;
};

DataSplit split(const Dataset& dataset, const fewshot::ClassSplit& classes, const SplitConfig& config);

/// Novel ids -> 0; everything else untouched.
LabelMap base_only_mask(const LabelMap& mask, const fewshot::ClassSplit& classes);
/// Keeps novel ids (and ignore); everything else -> 0.
LabelMap novel_only_mask(const LabelMap& mask, const fewshot::ClassSplit& classes);
/// Class ids -> channel indices of the split; ignore stays ignore.
/// Throws std::invalid_argument on an id outside the split.
LabelMap to_channels(const LabelMap& mask, const fewshot::ClassSplit& classes);

}  // namespace gfss::data
