#include "gfss/data/split.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gfss/numcore/rng.hpp"

namespace gfss::data {

void SplitConfig::validate() const {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw std::invalid_argument("holdout_fraction must lie in (0, 1)");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw std::invalid_argument("val_fraction must lie in (0, 1)");
}

LabelMap base_only_mask(const LabelMap& mask, const fewshot::ClassSplit& classes) {
  LabelMap out = mask;
  for (auto& id : out.ids)
    if (classes.is_novel(id)) id = 0;
  return out;
}

LabelMap novel_only_mask(const LabelMap& mask, const fewshot::ClassSplit& classes) {
  LabelMap out = mask;
  for (auto& id : out.ids)
    if (id != num::kIgnoreId && !classes.is_novel(id)) id = 0;
  return out;
}

LabelMap to_channels(const LabelMap& mask, const fewshot::ClassSplit& classes) {
  LabelMap out = mask;
  for (auto& id : out.ids) {
    if (id == num::kIgnoreId) continue;
    const int ch = classes.channel_of(id);
    if (ch < 0) throw std::invalid_argument("label " + std::to_string(id) + " is not part of the class split");
    id = static_cast<std::uint8_t>(ch);
  }
  return out;
}

DataSplit split(const Dataset& dataset, const fewshot::ClassSplit& classes, const SplitConfig& config) {
  config.validate();
  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  num::Rng rng(config.seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);

  const auto pool_n = static_cast<std::size_t>(std::llround(config.holdout_fraction * static_cast<double>(n)));
  const std::size_t rest = n - std::min(pool_n, n);
  const auto val_n = static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(rest)));
  const std::size_t train_n = rest - std::min(val_n, rest);
  if (pool_n == 0 || val_n == 0 || train_n == 0)
    throw std::invalid_argument("dataset of " + std::to_string(n) + " images leaves an empty partition");

  DataSplit out;
  out.pool_ids.assign(order.begin(), order.begin() + pool_n);
  out.val_ids.assign(order.begin() + pool_n, order.begin() + pool_n + val_n);
  out.train_ids.assign(order.begin() + pool_n + val_n, order.end());
  for (auto i : out.pool_ids) out.pool.samples.push_back(dataset.samples[i]);
  auto relabeled = [&](std::size_t i) {
    Sample s = dataset.samples[i];
    s.mask = base_only_mask(s.mask, classes);
    return s;
  };
  for (auto i : out.val_ids) out.val.samples.push_back(relabeled(i));
  for (auto i : out.train_ids) out.train.samples.push_back(relabeled(i));
  return out;
}

}  // namespace gfss::data
