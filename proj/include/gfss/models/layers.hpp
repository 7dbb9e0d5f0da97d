#pragma once

#include <string>
#include <vector>

#include "gfss/numcore/ops.hpp"
#include "gfss/numcore/rng.hpp"
#include "gfss/numcore/tensor.hpp"

namespace gfss::models {

using num::Tensor;

enum class ParamRole { generic, layer_norm, class_embedding, classifier_head };

/// Handle to a model parameter; the tensor shares storage with the module.
struct ParamRef {
  std::string name;
  Tensor tensor;
  ParamRole role = ParamRole::generic;
};

using ParamList = std::vector<ParamRef>;

// Weight init: truncated normal (std 0.02) for linear/attention weights,
// He fan-in normal for convolutions, layer norm scale 1 / shift 0, biases 0.
Tensor trunc_normal(num::Rng& rng, num::Shape shape, double stddev = 0.02);
Tensor he_normal(num::Rng& rng, num::Shape shape, std::size_t fan_in);

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  Linear() = default;
  Linear(num::Rng& rng, std::size_t in, std::size_t out);
  Tensor forward(const Tensor& x) const { return num::linear(x, weight, bias); }
  void collect(const std::string& prefix, ParamList& out) const;
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  explicit LayerNorm(std::size_t dim);
  Tensor forward(const Tensor& x) const { return num::layer_norm(x, gamma, beta); }
  void collect(const std::string& prefix, ParamList& out) const;
};

struct Conv2d {
  Tensor weight;  // [O, C, k, k]
  Tensor bias;    // [O]
  std::size_t stride = 1;
  std::size_t padding = 0;

  Conv2d() = default;
  Conv2d(num::Rng& rng, std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride, std::size_t padding);
  Tensor forward(const Tensor& x) const;  // x[N,C,H,W]
  void collect(const std::string& prefix, ParamList& out) const;
};

/// Pre-norm transformer block: x + attn(ln1(x)), then x + mlp(ln2(x)).
struct TransformerBlock {
  LayerNorm ln1;
  num::AttentionWeights attn;
  LayerNorm ln2;
  Linear fc1;
  Linear fc2;
  std::size_t heads = 1;

  TransformerBlock() = default;
  TransformerBlock(num::Rng& rng, std::size_t dim, std::size_t heads, std::size_t mlp_ratio = 4);
  Tensor forward(const Tensor& x) const;  // x[T,D]
  void collect(const std::string& prefix, ParamList& out) const;
};

/// Per-class prototype rows theta = [K, C] plus biases; the augmentable head.
struct ClassifierHead {
  Tensor weight;  // [K, C]
  Tensor bias;    // [K]

  ClassifierHead() = default;
  ClassifierHead(num::Rng& rng, std::size_t channels, std::size_t classes);
  std::size_t classes() const { return weight.dim(0); }
  std::size_t channels() const { return weight.dim(1); }
  Tensor forward(const Tensor& map) const;  // [C,h,w] -> [K,h,w]
  void collect(const std::string& prefix, ParamList& out) const;
};

}  // namespace gfss::models
