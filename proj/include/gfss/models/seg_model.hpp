#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include "gfss/models/decoder.hpp"
#include "gfss/models/encoder.hpp"
#include "gfss/numcore/checkpoint.hpp"

namespace gfss::models {

struct ModelConfig {
  EncoderConfig encoder;
  DecoderConfig decoder;
  std::size_t class_count = 16;
};

/// Encoder + decoder. Trainability is the requires_grad flag of each
/// parameter tensor. Parameter names carry an "encoder." or "decoder." prefix.
class SegModel {
 public:
  SegModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::size_t image_size() const { return config_.encoder.image_size; }
  std::size_t class_count() const { return decoder_->class_count(); }

  Encoder& encoder() { return *encoder_; }
  const Encoder& encoder() const { return *encoder_; }
  Decoder& decoder() { return *decoder_; }
  const Decoder& decoder() const { return *decoder_; }

  Features encode(const Tensor& image) const { return encoder_->forward(image); }
  /// image[3,H,W] -> logits[K,H,W]
  Tensor forward(const Tensor& image) const;

  ParamList parameters() const;
  ParamList encoder_parameters() const;
  ParamList decoder_parameters() const;
  std::vector<Tensor> trainable_parameters() const;
  std::vector<bool> trainable_mask() const;
  std::size_t parameter_count() const;

  void set_trainable(const std::function<bool(const ParamRef&)>& predicate);
  void set_encoder_trainable(bool flag);
  void set_all_trainable(bool flag);

  num::StateDict state_dict() const;
  /// Copies values into the existing parameters. Names and shapes must match
  /// exactly; trainability flags are left alone.
  void load_state_dict(const num::StateDict& state);

 private:
  ModelConfig config_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<Decoder> decoder_;
};

std::size_t count_elements(const ParamList& params);

}  // namespace gfss::models
