#pragma once

#include <cstdint>
#include <vector>

#include "gfss/data/dataset.hpp"
#include "gfss/fewshot/class_split.hpp"
#include "gfss/models/seg_model.hpp"
#include "gfss/numcore/sgd.hpp"

namespace gfss::fewshot {

struct AdaptConfig {
  std::size_t iterations = 300;
  float learning_rate = 1.25e-3f;
  float momentum = 0.9f;
  float weight_decay = 0.0f;
  std::size_t shots = 1;

  num::SgdConfig sgd() const { return {learning_rate, momentum, weight_decay}; }
  void validate() const;
};

struct AdaptResult {
  std::vector<double> losses;  // support loss before each step
};

/// Fine-tunes the trainable parameters of an augmented model on the support
/// set. All supports form one batch. The loss is cross-entropy on the
/// adjusted softmax, so base-class mass counts as background.
/// Masks may only hold 0, novel ids and 255.
AdaptResult adapt_on_support(models::SegModel& model, const std::vector<data::Sample>& supports,
                             const ClassSplit& split, const AdaptConfig& config);

/// Support loss at the current parameters (no update).
double support_loss(const models::SegModel& model, const std::vector<data::Sample>& supports, const ClassSplit& split);

struct QueryResult {
  num::Tensor probs;     // [K,H,W], full softmax, not adjusted
  num::LabelMap labels;  // channel indices
};

QueryResult run_query(const models::SegModel& model, const num::Tensor& image);

struct EpisodeInput {
  num::Tensor query_image;
  std::vector<data::Sample> supports;  // novel-only masks
  std::uint64_t seed = 0;              // novel parameter init
};

/// Fresh model from the checkpoint, augment, adapt, predict. A pure function
/// of its arguments.
QueryResult episode_protocol(const num::StateDict& checkpoint, const models::ModelConfig& base_config,
                             const ClassSplit& split, const EpisodeInput& episode, const AdaptConfig& config,
                             AdaptResult* trace = nullptr);

}  // namespace gfss::fewshot
