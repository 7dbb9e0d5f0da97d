#include "gfss/fewshot/adapt.hpp"

#include <stdexcept>
#include <string>

#include "gfss/fewshot/adjust.hpp"
#include "gfss/fewshot/augment.hpp"
#include "gfss/fewshot/base_train.hpp"
#include "gfss/numcore/ops.hpp"
#include "gfss/numcore/sgd.hpp"

namespace gfss::fewshot {

using models::SegModel;
using num::Tensor;

void AdaptConfig::validate() const {
  if (shots == 0) throw std::invalid_argument("shots must be positive");
  sgd().validate();
}

namespace {

// Support masks -> channel labels; base ids are rejected.
std::vector<std::uint8_t> support_labels(const std::vector<data::Sample>& supports, const ClassSplit& split) {
  std::vector<std::uint8_t> out;
  for (const auto& s : supports) {
    for (auto id : s.mask.ids) {
      if (id == num::kIgnoreId || id == 0) {
        out.push_back(id);
      } else if (split.is_novel(id)) {
        out.push_back(static_cast<std::uint8_t>(split.channel_of(id)));
      } else if (split.is_base(id)) {
        throw std::invalid_argument("support mask contains base-class id " + std::to_string(id));
      } else {
        throw std::invalid_argument("support mask contains unknown id " + std::to_string(id));
      }
    }
  }
  return out;
}

void check_augmented(const SegModel& model, const ClassSplit& split) {
  if (model.class_count() != split.channel_count())
    throw std::invalid_argument("model has " + std::to_string(model.class_count()) +
                                " classes; augment it to 1+|Cb|+|Cn| = " + std::to_string(split.channel_count()));
}

struct SupportBatch {
  std::vector<Tensor> head_inputs;
  std::vector<std::uint8_t> labels;
  std::size_t h = 0, w = 0;
};

// Encoder and decoder body are frozen during adaptation, so their output is
// computed once.
SupportBatch prepare(const SegModel& model, const std::vector<data::Sample>& supports, const ClassSplit& split) {
  if (supports.empty()) throw std::invalid_argument("empty support set");
  SupportBatch b;
  b.labels = support_labels(supports, split);
  b.h = supports.front().height();
  b.w = supports.front().width();
  for (const auto& s : supports) {
    if (s.height() != b.h || s.width() != b.w) throw std::invalid_argument("support images differ in size");
    b.head_inputs.push_back(model.decoder().head_input(model.encode(s.image_tensor()).detached()).detach());
  }
  return b;
}

Tensor batch_loss(const SegModel& model, const SupportBatch& b, const ClassSplit& split) {
  std::vector<Tensor> logits;
  for (const auto& x : b.head_inputs) logits.push_back(model.decoder().head(x, b.h, b.w));
  Tensor probs = adjust_prediction(num::softmax(num::stack(logits), 1), split);
  return num::cross_entropy(probs, b.labels);
}

}  // namespace

double support_loss(const SegModel& model, const std::vector<data::Sample>& supports, const ClassSplit& split) {
  check_augmented(model, split);
  return batch_loss(model, prepare(model, supports, split), split).item();
}

AdaptResult adapt_on_support(SegModel& model, const std::vector<data::Sample>& supports, const ClassSplit& split,
                             const AdaptConfig& config) {
  config.validate();
  check_augmented(model, split);
  for (const auto& p : model.encoder_parameters())
    if (p.tensor.requires_grad()) throw std::invalid_argument("encoder must be frozen during adaptation");
  AdaptResult result;
  if (config.iterations == 0) {
    support_labels(supports, split);
    return result;
  }
  const SupportBatch batch = prepare(model, supports, split);
  std::vector<Tensor> params = model.trainable_parameters();
  num::Sgd optimizer(config.sgd());
  result.losses.reserve(config.iterations);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    Tensor loss = batch_loss(model, batch, split);
    result.losses.push_back(loss.item());
    if (params.empty()) continue;
    loss.backward();
    optimizer.step(params);
  }
  return result;
}

QueryResult run_query(const SegModel& model, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != model.image_size() || image.dim(2) != model.image_size())
    throw std::invalid_argument("query image geometry does not match the model");
  QueryResult r;
  r.probs = num::softmax(model.forward(image), 0).detach();
  r.labels = argmax_labels(r.probs);
  return r;
}

QueryResult episode_protocol(const num::StateDict& checkpoint, const models::ModelConfig& base_config,
                             const ClassSplit& split, const EpisodeInput& episode, const AdaptConfig& config,
                             AdaptResult* trace) {
  if (base_config.class_count != split.base_channels())
    throw std::invalid_argument("base model config must predict 1+|Cb| classes");
  SegModel model(base_config, 0);
  model.load_state_dict(checkpoint);
  augment_model(model, split, episode.seed);
  AdaptResult adapted = adapt_on_support(model, episode.supports, split, config);
  if (trace) *trace = std::move(adapted);
  model.set_all_trainable(false);
  return run_query(model, episode.query_image);
}

}  // namespace gfss::fewshot
