#include "gfss/fewshot/pretrain.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <stdexcept>

#include "gfss/numcore/ops.hpp"
#include "gfss/numcore/rng.hpp"

namespace gfss::fewshot {

using num::Tensor;

void PretrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("pretrain epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("pretrain batch_size must be positive");
  sgd.validate();
}

num::LabelMap downsample_majority(const num::LabelMap& mask, std::size_t gh, std::size_t gw) {
  if (gh == 0 || gw == 0 || mask.height % gh != 0 || mask.width % gw != 0)
    throw std::invalid_argument("mask size is not a multiple of the grid");
  const std::size_t ch = mask.height / gh, cw = mask.width / gw;
  num::LabelMap out(gh, gw);
  for (std::size_t gy = 0; gy < gh; ++gy)
    for (std::size_t gx = 0; gx < gw; ++gx) {
      std::array<std::size_t, 256> votes{};
      for (std::size_t y = gy * ch; y < (gy + 1) * ch; ++y)
        for (std::size_t x = gx * cw; x < (gx + 1) * cw; ++x) ++votes[mask.at(y, x)];
      votes[num::kIgnoreId] = 0;
      const auto best = std::max_element(votes.begin(), votes.end());
      out.at(gy, gx) = *best == 0 ? num::kIgnoreId : static_cast<std::uint8_t>(best - votes.begin());
    }
  return out;
}

PretrainResult pretrain_encoder(models::Encoder& encoder, const data::Dataset& data, std::size_t class_count,
                                const PretrainConfig& config, const std::function<void(std::size_t, double)>& on_epoch) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("empty pretraining dataset");
  const auto spec = encoder.spec();

  std::vector<std::vector<std::uint8_t>> labels;
  for (const auto& s : data.samples) {
    auto small = downsample_majority(s.mask, spec.grid_h, spec.grid_w);
    for (auto id : small.ids)
      if (id != num::kIgnoreId && id > class_count) throw std::invalid_argument("label outside pretraining classes");
    labels.push_back(std::move(small.ids));
  }

  num::Rng init(num::derive_seed(config.seed, 0));
  models::ClassifierHead head(init, spec.channels, class_count + 1);

  models::ParamList plist;
  encoder.collect(plist);
  std::vector<bool> flags;
  std::vector<Tensor> params;
  for (auto& p : plist) {
    flags.push_back(p.tensor.requires_grad());
    p.tensor.set_requires_grad(true);
    params.push_back(p.tensor);
  }
  params.push_back(head.weight);
  params.push_back(head.bias);

  num::Sgd optimizer(config.sgd);
  PretrainResult result;
  std::vector<std::size_t> order(data.size());
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
        logits.push_back(head.forward(encoder.forward(data.samples[order[j]].image_tensor()).final_map()));
        batch_labels.insert(batch_labels.end(), labels[order[j]].begin(), labels[order[j]].end());
      }
      Tensor loss = num::cross_entropy(num::softmax(num::stack(logits), 1), batch_labels);
      loss_sum += loss.item() * static_cast<double>(end - start);
      loss.backward();
      optimizer.step(params);
    }
    result.losses.push_back(loss_sum / static_cast<double>(data.size()));
    if (on_epoch) on_epoch(epoch, result.losses.back());
  }

  for (std::size_t i = 0; i < plist.size(); ++i) plist[i].tensor.set_requires_grad(flags[i]);

  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Tensor scores = head.forward(encoder.forward(data.samples[i].image_tensor()).final_map());
    const std::size_t k = scores.dim(0), hw = scores.dim(1) * scores.dim(2);
    for (std::size_t p = 0; p < hw; ++p) {
      if (labels[i][p] == num::kIgnoreId) continue;
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c)
        if (scores.at(c * hw + p) > scores.at(best * hw + p)) best = c;
      hit += best == labels[i][p];
      ++total;
    }
  }
  result.token_accuracy = total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
  return result;
}

}  // namespace gfss::fewshot
