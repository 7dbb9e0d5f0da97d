#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gfss/data/dataset.hpp"
#include "gfss/fewshot/class_split.hpp"
#include "gfss/models/seg_model.hpp"
#include "gfss/numcore/sgd.hpp"

namespace gfss::fewshot {

struct BaseTrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 8;
  num::SgdConfig sgd{2.5e-4, 0.9, 1e-4};
  std::uint64_t seed = 1;  // batch shuffling

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double val_miou = 0.0;
};

struct BaseTrainResult {
  num::StateDict checkpoint;  // parameters after best_epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_miou = 0.0;
};

struct BaseTrainHooks {
  /// Replaces the built-in validation when set.
  std::function<double(const models::SegModel&, std::size_t epoch)> validate;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Cross-entropy training on {background} + base classes. Trainability flags
/// of `model` are respected (see apply_base_training_freeze). Validates after
/// every epoch; the first epoch with the highest validation mIoU wins.
BaseTrainResult base_train(models::SegModel& model, const data::Dataset& train, const data::Dataset& val,
                           const ClassSplit& split, const BaseTrainConfig& config, const BaseTrainHooks& hooks = {});

/// mIoU over {background} + base ids on a base-labeled dataset.
double validation_miou(const models::SegModel& model, const data::Dataset& val, const ClassSplit& split);

/// Class ids -> channel indices for a base-labeled mask; ids outside
/// {0} + base + {255} throw std::invalid_argument.
num::LabelMap base_channel_labels(const num::LabelMap& mask, const ClassSplit& split);

/// Per-pixel argmax over channel axis 0 of [K,H,W].
num::LabelMap argmax_labels(const num::Tensor& scores);

}  // namespace gfss::fewshot
