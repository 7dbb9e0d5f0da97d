#include "gfss/fewshot/base_train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gfss/eval/metrics.hpp"
#include "gfss/numcore/ops.hpp"
#include "gfss/numcore/rng.hpp"

namespace gfss::fewshot {

using models::Features;
using models::SegModel;
using num::Tensor;

void BaseTrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  sgd.validate();
}

num::LabelMap base_channel_labels(const num::LabelMap& mask, const ClassSplit& split) {
  num::LabelMap out = mask;
  const int limit = static_cast<int>(split.base_channels());
  for (auto& id : out.ids) {
    if (id == num::kIgnoreId) continue;
    const int ch = split.channel_of(id);
    if (ch < 0 || ch >= limit) throw std::invalid_argument("label " + std::to_string(id) + " outside allowed set");
    id = static_cast<std::uint8_t>(ch);
  }
  return out;
}

num::LabelMap argmax_labels(const Tensor& scores) {
  if (scores.rank() != 3) throw std::invalid_argument("argmax_labels expects [K,H,W]");
  const std::size_t k = scores.dim(0), h = scores.dim(1), w = scores.dim(2), hw = h * w;
  auto d = scores.data();
  num::LabelMap out(h, w);
  for (std::size_t i = 0; i < hw; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (d[c * hw + i] > d[best * hw + i]) best = c;
    out.ids[i] = static_cast<std::uint8_t>(best);
  }
  return out;
}

namespace {

bool encoder_frozen(const SegModel& model) {
  for (const auto& p : model.encoder_parameters())
    if (p.tensor.requires_grad()) return false;
  return true;
}

std::size_t matrix_size(const ClassSplit& split) {
  std::size_t m = 0;
  for (auto id : split.base_ids()) m = std::max<std::size_t>(m, id);
  for (auto id : split.novel_ids()) m = std::max<std::size_t>(m, id);
  return m + 1;
}

double miou_from_predictions(const SegModel& model, const data::Dataset& val, const ClassSplit& split,
                             const std::vector<Features>* cached) {
  eval::ConfusionMatrix conf(matrix_size(split));
  for (std::size_t i = 0; i < val.size(); ++i) {
    const auto& s = val.samples[i];
    Tensor logits = cached ? model.decoder().forward((*cached)[i], s.height(), s.width())
                           : model.forward(s.image_tensor());
    num::LabelMap pred = argmax_labels(logits);
    for (auto& id : pred.ids) id = split.id_of_channel(id);
    conf.accumulate(pred, s.mask);
  }
  std::vector<std::uint8_t> ids{0};
  ids.insert(ids.end(), split.base_ids().begin(), split.base_ids().end());
  return eval::miou(conf, ids);
}

std::vector<Features> encode_all(const SegModel& model, const data::Dataset& ds) {
  std::vector<Features> out;
  out.reserve(ds.size());
  for (const auto& s : ds.samples) out.push_back(model.encode(s.image_tensor()).detached());
  return out;
}

}  // namespace

double validation_miou(const SegModel& model, const data::Dataset& val, const ClassSplit& split) {
  return miou_from_predictions(model, val, split, nullptr);
}

BaseTrainResult base_train(SegModel& model, const data::Dataset& train, const data::Dataset& val,
                           const ClassSplit& split, const BaseTrainConfig& config, const BaseTrainHooks& hooks) {
  config.validate();
  if (train.empty()) throw std::invalid_argument("empty training dataset");
  if (!hooks.validate && val.empty()) throw std::invalid_argument("empty validation dataset");
  if (model.class_count() != split.base_channels())
    throw std::invalid_argument("model predicts " + std::to_string(model.class_count()) + " classes, expected 1+|Cb| = " +
                                std::to_string(split.base_channels()));

  std::vector<std::vector<std::uint8_t>> labels;
  labels.reserve(train.size());
  for (const auto& s : train.samples) labels.push_back(base_channel_labels(s.mask, split).ids);
  for (const auto& s : val.samples) base_channel_labels(s.mask, split);

  // a frozen encoder yields the same features every epoch
  const bool cache = encoder_frozen(model);
  std::vector<Features> train_feats, val_feats;
  if (cache) {
    train_feats = encode_all(model, train);
    if (!hooks.validate) val_feats = encode_all(model, val);
  }

  std::vector<Tensor> params = model.trainable_parameters();
  num::Sgd optimizer(config.sgd);
  BaseTrainResult result;
  result.best_val_miou = -1.0;
  std::vector<std::size_t> order(train.size());

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    num::Rng rng(num::derive_seed(config.seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<Tensor> logits;
      std::vector<std::uint8_t> batch_labels;
      for (std::size_t j = start; j < end; ++j) {
        const auto& s = train.samples[order[j]];
        logits.push_back(cache ? model.decoder().forward(train_feats[order[j]], s.height(), s.width())
                               : model.forward(s.image_tensor()));
        batch_labels.insert(batch_labels.end(), labels[order[j]].begin(), labels[order[j]].end());
      }
      Tensor loss = num::cross_entropy(num::softmax(num::stack(logits), 1), batch_labels);
      loss_sum += loss.item() * static_cast<double>(end - start);
      if (!params.empty()) {
        loss.backward();
        optimizer.step(params);
      }
    }

    EpochRecord rec{epoch, loss_sum / static_cast<double>(train.size()), 0.0};
    rec.val_miou = hooks.validate ? hooks.validate(model, epoch)
                                  : miou_from_predictions(model, val, split, cache ? &val_feats : nullptr);
    if (rec.val_miou > result.best_val_miou) {
      result.best_val_miou = rec.val_miou;
      result.best_epoch = epoch;
      result.checkpoint = model.state_dict();
    }
    result.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  return result;
}

}  // namespace gfss::fewshot
