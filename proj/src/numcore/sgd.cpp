#include "gfss/numcore/sgd.hpp"

#include <stdexcept>
#include <string>

namespace gfss::num {

void SgdConfig::validate() const {
  // lr == 0 is accepted as a no-op update (used for freezing checks).
  if (!(learning_rate >= 0.0f)) throw std::invalid_argument("sgd: learning_rate must be non-negative");
  if (!(momentum >= 0.0f && momentum < 1.0f)) throw std::invalid_argument("sgd: momentum must lie in [0,1)");
  if (!(weight_decay >= 0.0f)) throw std::invalid_argument("sgd: weight_decay must be non-negative");
}

Sgd::Sgd(SgdConfig config) : config_(config) { config_.validate(); }

void Sgd::step(std::vector<Tensor>& params) {
  if (velocity_.empty()) {
    velocity_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) velocity_[i].assign(params[i].numel(), 0.0f);
  }
  if (velocity_.size() != params.size()) throw std::invalid_argument("sgd: parameter list changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!params[i].has_grad()) throw std::invalid_argument("sgd: missing gradient for parameter " + std::to_string(i));

  const float lr = config_.learning_rate, mom = config_.momentum, wd = config_.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = params[i].grad();
    auto& v = velocity_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      v[j] = mom * v[j] + g[j] + wd * p[j];
      p[j] -= lr * v[j];
    }
    params[i].clear_grad();
  }
}

}  // namespace gfss::num
