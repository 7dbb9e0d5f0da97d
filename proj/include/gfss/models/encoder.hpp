#pragma once

#include <memory>
#include <vector>

#include "gfss/models/kinds.hpp"
#include "gfss/models/layers.hpp"

namespace gfss::models {

/// Encoder output. ViT encoders fill `tokens`; CNN encoders fill `stages`
/// (finest first) and leave `tokens` empty.
struct Features {
  std::vector<Tensor> stages;  // [C_i, h_i, w_i]
  Tensor tokens;               // [T, D]
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;

  bool multi_scale() const { return !stages.empty(); }
  Tensor final_map() const;       // [C, grid_h, grid_w]
  Tensor token_sequence() const;  // [grid_h*grid_w, C]
  Features detached() const;
};

struct FeatureSpec {
  bool multi_scale = false;
  std::vector<std::size_t> stage_channels;  // CNN only
  std::size_t channels = 0;                 // channels of the final map / token dim
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
  bool operator==(const FeatureSpec&) const = default;
};

struct EncoderConfig {
  EncoderKind kind = EncoderKind::tiny_vit_a;
  std::size_t image_size = 64;
  std::size_t patch_size = 8;  // ViT only
  std::size_t depth = 4;       // ViT only
  std::size_t heads = 4;       // ViT only
  std::size_t dim = 0;         // ViT token dim; 0 picks the kind default (64 / 128)
};

class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual EncoderKind kind() const = 0;
  virtual FeatureSpec spec() const = 0;
  /// image[3,H,W] -> features
  virtual Features forward(const Tensor& image) const = 0;
  virtual void collect(ParamList& out) const = 0;
};

class VitEncoder final : public Encoder {
 public:
  VitEncoder(const EncoderConfig& config, num::Rng& rng);
  EncoderKind kind() const override { return kind_; }
  FeatureSpec spec() const override;
  Features forward(const Tensor& image) const override;
  void collect(ParamList& out) const override;

 private:
  EncoderKind kind_;
  std::size_t image_size_, patch_, dim_, grid_;
  Conv2d patch_embed_;
  Tensor pos_embed_;  // [T, D]
  std::vector<TransformerBlock> blocks_;
  LayerNorm norm_;
};

/// Residual CNN with four stages at strides 2, 4, 8, 16.
class CnnEncoder final : public Encoder {
 public:
  CnnEncoder(const EncoderConfig& config, num::Rng& rng);
  EncoderKind kind() const override { return kind_; }
  FeatureSpec spec() const override;
  Features forward(const Tensor& image) const override;
  void collect(ParamList& out) const override;

  static constexpr std::size_t kStride = 16;

 private:
  struct Block {
    Conv2d conv1, conv2;
    bool has_projection = false;
    Conv2d projection;
  };
  EncoderKind kind_;
  std::size_t image_size_;
  Conv2d stem_;
  std::vector<std::vector<Block>> stages_;
  std::vector<std::size_t> widths_;
};

std::unique_ptr<Encoder> build_encoder(const EncoderConfig& config, num::Rng& rng);

}  // namespace gfss::models
