#pragma once

#include <memory>

#include "gfss/models/encoder.hpp"

namespace gfss::models {

struct DecoderConfig {
  DecoderKind kind = DecoderKind::linear;
  std::size_t dim = 64;             // mask transformer width / UPerNet fusion channels
  std::size_t depth = 2;            // mask transformer blocks
  std::size_t heads = 4;            // mask transformer heads
  std::size_t upernet_channels = 32;
};

/// Decoders split into a body (features -> head input) and a head (head input
/// -> logits). When the body is frozen the head input can be cached.
class Decoder {
 public:
  virtual ~Decoder() = default;
  virtual DecoderKind kind() const = 0;
  virtual std::size_t class_count() const = 0;
  virtual Tensor head_input(const Features& features) const = 0;
  virtual Tensor head(const Tensor& input, std::size_t out_h, std::size_t out_w) const = 0;
  virtual void collect(ParamList& out) const = 0;

  /// logits[K, out_h, out_w]
  Tensor forward(const Features& features, std::size_t out_h, std::size_t out_w) const {
    return head(head_input(features), out_h, out_w);
  }
};

/// 1x1 projection of the final feature map, then bilinear upsampling.
class LinearDecoder final : public Decoder {
 public:
  LinearDecoder(const FeatureSpec& spec, std::size_t classes, num::Rng& rng);
  DecoderKind kind() const override { return DecoderKind::linear; }
  std::size_t class_count() const override { return head_.classes(); }
  Tensor head_input(const Features& features) const override;
  Tensor head(const Tensor& input, std::size_t out_h, std::size_t out_w) const override;
  void collect(ParamList& out) const override;

  ClassifierHead& classifier() { return head_; }
  const ClassifierHead& classifier() const { return head_; }

 private:
  FeatureSpec spec_;
  ClassifierHead head_;
};

/// Object head of a feature pyramid: lateral 1x1 convs, top-down merge,
/// concatenation at the finest level, 1x1 fusion, classifier.
class UperNetLiteDecoder final : public Decoder {
 public:
  UperNetLiteDecoder(const FeatureSpec& spec, std::size_t classes, std::size_t channels, num::Rng& rng);
  DecoderKind kind() const override { return DecoderKind::upernet_lite; }
  std::size_t class_count() const override { return head_.classes(); }
  Tensor head_input(const Features& features) const override;
  Tensor head(const Tensor& input, std::size_t out_h, std::size_t out_w) const override;
  void collect(ParamList& out) const override;

  ClassifierHead& classifier() { return head_; }
  const ClassifierHead& classifier() const { return head_; }

 private:
  FeatureSpec spec_;
  std::vector<Conv2d> laterals_;
  Conv2d fuse_;
  ClassifierHead head_;
};

/// Joint transformer over [patch tokens; class embeddings]; the logit of class
/// k at a patch is <patch, class_k> / sqrt(dim), upsampled to pixels.
class MaskTransformerDecoder final : public Decoder {
 public:
  MaskTransformerDecoder(const FeatureSpec& spec, std::size_t classes, const DecoderConfig& config, num::Rng& rng);
  DecoderKind kind() const override { return DecoderKind::mask_transformer_lite; }
  std::size_t class_count() const override { return class_embeddings_.dim(0); }
  Tensor head_input(const Features& features) const override;
  Tensor head(const Tensor& input, std::size_t out_h, std::size_t out_w) const override;
  void collect(ParamList& out) const override;

  Tensor& class_embeddings() { return class_embeddings_; }
  const Tensor& class_embeddings() const { return class_embeddings_; }
  std::size_t dim() const { return dim_; }

 private:
  FeatureSpec spec_;
  std::size_t dim_;
  Linear proj_;
  Tensor class_embeddings_;  // [K, dim]
  std::vector<TransformerBlock> blocks_;
  LayerNorm norm_;
};

std::unique_ptr<Decoder> build_decoder(const DecoderConfig& config, const FeatureSpec& spec, std::size_t classes,
                                       num::Rng& rng);

}  // namespace gfss::models
