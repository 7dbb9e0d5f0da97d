#pragma once

#include <vector>

#include "gfss/numcore/tensor.hpp"

namespace gfss::num {

struct SgdConfig {
  float learning_rate = 0.01f;
  float momentum = 0.0f;
  float weight_decay = 0.0f;

  void validate() const;
};

/// Momentum SGD: v <- momentum*v + grad + weight_decay*param; param <- param - lr*v.
/// Momentum buffers are positional, so pass the same parameter list every step.
class Sgd {
 public:
  explicit Sgd(SgdConfig config);

  /// Applies one update and clears the gradients. Throws if a parameter has no grad.
  void step(std::vector<Tensor>& params);

  const SgdConfig& config() const { return config_; }

 private:
  SgdConfig config_;
  std::vector<std::vector<float>> velocity_;
};

}  // namespace gfss::num
