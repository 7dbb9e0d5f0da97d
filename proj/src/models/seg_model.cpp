#include "gfss/models/seg_model.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace gfss::models {

std::size_t count_elements(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

SegModel::SegModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  num::Rng enc_rng(num::derive_seed(seed, 1));
  num::Rng dec_rng(num::derive_seed(seed, 2));
  encoder_ = build_encoder(config.encoder, enc_rng);
  decoder_ = build_decoder(config.decoder, encoder_->spec(), config.class_count, dec_rng);
}

Tensor SegModel::forward(const Tensor& image) const {
  return decoder_->forward(encoder_->forward(image), image.dim(1), image.dim(2));
}

ParamList SegModel::encoder_parameters() const {
  ParamList list;
  encoder_->collect(list);
  for (auto& p : list) p.name = "encoder." + p.name;
  return list;
}

ParamList SegModel::decoder_parameters() const {
  ParamList list;
  decoder_->collect(list);
  for (auto& p : list) p.name = "decoder." + p.name;
  return list;
}

ParamList SegModel::parameters() const {
  ParamList list = encoder_parameters();
  ParamList dec = decoder_parameters();
  list.insert(list.end(), dec.begin(), dec.end());
  return list;
}

std::vector<Tensor> SegModel::trainable_parameters() const {
  std::vector<Tensor> out;
  for (const auto& p : parameters())
    if (p.tensor.requires_grad()) out.push_back(p.tensor);
  return out;
}

std::vector<bool> SegModel::trainable_mask() const {
  std::vector<bool> out;
  for (const auto& p : parameters()) out.push_back(p.tensor.requires_grad());
  return out;
}

std::size_t SegModel::parameter_count() const { return count_elements(parameters()); }

void SegModel::set_trainable(const std::function<bool(const ParamRef&)>& predicate) {
  for (auto& p : parameters()) p.tensor.set_requires_grad(predicate(p));
}

void SegModel::set_encoder_trainable(bool flag) {
  for (auto& p : encoder_parameters()) p.tensor.set_requires_grad(flag);
}

void SegModel::set_all_trainable(bool flag) {
  for (auto& p : parameters()) p.tensor.set_requires_grad(flag);
}

num::StateDict SegModel::state_dict() const {
  num::StateDict out;
  for (const auto& p : parameters()) out.push_back({p.name, p.tensor.detach()});
  return out;
}

void SegModel::load_state_dict(const num::StateDict& state) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& e : state) {
    if (!by_name.emplace(e.name, &e.tensor).second) throw std::invalid_argument("duplicate tensor '" + e.name + "'");
  }
  ParamList params = parameters();
  if (params.size() != state.size())
    throw std::invalid_argument("checkpoint has " + std::to_string(state.size()) + " tensors, model has " +
                                std::to_string(params.size()));
  for (auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw std::invalid_argument("checkpoint is missing '" + p.name + "'");
    if (it->second->shape() != p.tensor.shape()) throw std::invalid_argument("shape mismatch for '" + p.name + "'");
  }
  for (auto& p : params) {
    auto src = by_name.at(p.name)->data();
    std::copy(src.begin(), src.end(), p.tensor.data().begin());
  }
}

}  // namespace gfss::models
