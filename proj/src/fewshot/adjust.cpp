#include "gfss/fewshot/adjust.hpp"

#include <stdexcept>
#include <string>

namespace gfss::fewshot {

using num::Tensor;

num::Tensor adjust_prediction(const Tensor& probs, const ClassSplit& split) {
  if (probs.rank() != 3 && probs.rank() != 4) throw std::invalid_argument("adjust_prediction expects [K,H,W] or [N,K,H,W]");
  const std::size_t axis = probs.rank() - 3;
  const std::size_t k = probs.dim(axis);
  if (k != split.channel_count())
    throw std::invalid_argument("probs has " + std::to_string(k) + " channels, split needs " +
                                std::to_string(split.channel_count()));
  const std::size_t n = axis == 0 ? 1 : probs.dim(0);
  const std::size_t hw = probs.dim(axis + 1) * probs.dim(axis + 2);
  const std::size_t folded = split.base_channels();  // channels 0..|Cb|

  auto in = probs.data();
  std::vector<float> out(in.size(), 0.0f);
  for (std::size_t b = 0; b < n; ++b) {
    const float* src = in.data() + b * k * hw;
    float* dst = out.data() + b * k * hw;
    for (std::size_t c = 0; c < folded; ++c)
      for (std::size_t i = 0; i < hw; ++i) dst[i] += src[c * hw + i];
    for (std::size_t c = folded; c < k; ++c)
      for (std::size_t i = 0; i < hw; ++i) dst[c * hw + i] = src[c * hw + i];
  }

  return Tensor::make_result(
      probs.shape(), std::move(out), {probs},
      [probs, n, k, hw, folded](num::TensorImpl& o) {
        if (!probs.requires_grad()) return;
        auto g = probs.impl()->grad_buffer();
        for (std::size_t b = 0; b < n; ++b) {
          const float* go = o.grad.data() + b * k * hw;
          float* gi = g.data() + b * k * hw;
          for (std::size_t c = 0; c < folded; ++c)
            for (std::size_t i = 0; i < hw; ++i) gi[c * hw + i] += go[i];
          for (std::size_t c = folded; c < k; ++c)
            for (std::size_t i = 0; i < hw; ++i) gi[c * hw + i] += go[c * hw + i];
        }
      },
      "adjust_prediction");
}

}  // namespace gfss::fewshot
