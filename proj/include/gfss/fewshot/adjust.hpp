#pragma once

#include "gfss/fewshot/class_split.hpp"
#include "gfss/numcore/tensor.hpp"

namespace gfss::fewshot {

/// Folds base-class mass into background: per pixel the output is
/// [p_0 + ... + p_|Cb|, 0 (x|Cb|), p_novel...]. Channel count is preserved.
/// probs is [K,H,W] or [N,K,H,W] with K = split.channel_count(). Differentiable.
num::Tensor adjust_prediction(const num::Tensor& probs, const ClassSplit& split);

}  // namespace gfss::fewshot
