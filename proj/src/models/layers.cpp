#include "gfss/models/layers.hpp"

#include <cmath>

namespace gfss::models {

using num::Shape;

Tensor trunc_normal(num::Rng& rng, Shape shape, double stddev) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<float>(rng.truncated_normal(stddev));
  t.set_requires_grad(true);
  return t;
}

Tensor he_normal(num::Rng& rng, Shape shape, std::size_t fan_in) {
  Tensor t(std::move(shape));
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : t.data()) v = static_cast<float>(rng.normal() * stddev);
  t.set_requires_grad(true);
  return t;
}

namespace {
Tensor zeros_param(Shape shape, float fill = 0.0f) {
  Tensor t(std::move(shape), fill);
  t.set_requires_grad(true);
  return t;
}
}  // namespace

Linear::Linear(num::Rng& rng, std::size_t in, std::size_t out)
    : weight(trunc_normal(rng, {in, out})), bias(zeros_param({out})) {}

void Linear::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

LayerNorm::LayerNorm(std::size_t dim) : gamma(zeros_param({dim}, 1.0f)), beta(zeros_param({dim})) {}

void LayerNorm::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".gamma", gamma, ParamRole::layer_norm});
  out.push_back({prefix + ".beta", beta, ParamRole::layer_norm});
}

Conv2d::Conv2d(num::Rng& rng, std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride_,
               std::size_t padding_)
    : weight(he_normal(rng, {out, in, kernel, kernel}, in * kernel * kernel)),
      bias(zeros_param({out})),
      stride(stride_),
      padding(padding_) {}

Tensor Conv2d::forward(const Tensor& x) const {
  return num::add_bias(num::conv2d(x, weight, stride, padding), bias, 1);
}

void Conv2d::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

TransformerBlock::TransformerBlock(num::Rng& rng, std::size_t dim, std::size_t heads_, std::size_t mlp_ratio)
    : ln1(dim),
      attn{trunc_normal(rng, {dim, 3 * dim}), zeros_param({3 * dim}), trunc_normal(rng, {dim, dim}),
           zeros_param({dim})},
      ln2(dim),
      fc1(rng, dim, dim * mlp_ratio),
      fc2(rng, dim * mlp_ratio, dim),
      heads(heads_) {}

Tensor TransformerBlock::forward(const Tensor& x) const {
  Tensor h = num::add(x, num::multi_head_attention(ln1.forward(x), attn, heads));
  return num::add(h, fc2.forward(num::gelu(fc1.forward(ln2.forward(h)))));
}

void TransformerBlock::collect(const std::string& prefix, ParamList& out) const {
  ln1.collect(prefix + ".ln1", out);
  out.push_back({prefix + ".attn.qkv.weight", attn.qkv_weight});
  out.push_back({prefix + ".attn.qkv.bias", attn.qkv_bias});
  out.push_back({prefix + ".attn.out.weight", attn.out_weight});
  out.push_back({prefix + ".attn.out.bias", attn.out_bias});
  ln2.collect(prefix + ".ln2", out);
  fc1.collect(prefix + ".mlp.fc1", out);
  fc2.collect(prefix + ".mlp.fc2", out);
}

ClassifierHead::ClassifierHead(num::Rng& rng, std::size_t channels, std::size_t classes)
    : weight(trunc_normal(rng, {classes, channels})), bias(zeros_param({classes})) {}

Tensor ClassifierHead::forward(const Tensor& map) const {
  const std::size_t c = map.dim(0), h = map.dim(1), w = map.dim(2);
  Tensor logits = num::matmul(weight, num::reshape(map, {c, h * w}));
  return num::reshape(num::add_bias(logits, bias, 0), {classes(), h, w});
}

void ClassifierHead::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight, ParamRole::classifier_head});
  out.push_back({prefix + ".bias", bias, ParamRole::classifier_head});
}

}  // namespace gfss::models
