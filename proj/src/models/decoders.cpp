#include <cmath>
#include <stdexcept>
#include <string>

#include "gfss/models/decoder.hpp"

namespace gfss::models {

namespace ops = gfss::num;

namespace {

void check_features(const FeatureSpec& spec, const Features& f) {
  if (f.multi_scale() != spec.multi_scale || f.grid_h != spec.grid_h || f.grid_w != spec.grid_w)
    throw std::invalid_argument("features do not match the decoder's feature spec");
}

}  // namespace

LinearDecoder::LinearDecoder(const FeatureSpec& spec, std::size_t classes, num::Rng& rng)
    : spec_(spec), head_(rng, spec.channels, classes) {
  if (classes == 0) throw std::invalid_argument("class_count must be positive");
}

Tensor LinearDecoder::head_input(const Features& features) const {
  check_features(spec_, features);
  return features.final_map();
}

Tensor LinearDecoder::head(const Tensor& input, std::size_t out_h, std::size_t out_w) const {
  return ops::bilinear_upsample(head_.forward(input), out_h, out_w);
}

void LinearDecoder::collect(ParamList& out) const { head_.collect("head", out); }

UperNetLiteDecoder::UperNetLiteDecoder(const FeatureSpec& spec, std::size_t classes, std::size_t channels,
                                       num::Rng& rng)
    : spec_(spec) {
  if (!spec.multi_scale) throw std::invalid_argument("upernet_lite requires multi-scale features");
  if (classes == 0) throw std::invalid_argument("class_count must be positive");
  for (std::size_t c : spec.stage_channels) laterals_.emplace_back(rng, c, channels, 1, 1, 0);
  const std::size_t levels = spec.stage_channels.size();
  fuse_ = Conv2d(rng, levels * channels, channels, 1, 1, 0);
  head_ = ClassifierHead(rng, channels, classes);
}

Tensor UperNetLiteDecoder::head_input(const Features& features) const {
  if (!features.multi_scale()) throw std::invalid_argument("upernet_lite requires multi-scale features");
  check_features(spec_, features);
  const std::size_t levels = laterals_.size();
  if (features.stages.size() != levels) throw std::invalid_argument("stage count mismatch");

  std::vector<Tensor> lat(levels);
  for (std::size_t i = 0; i < levels; ++i) {
    const Tensor& s = features.stages[i];
    lat[i] = laterals_[i].forward(ops::reshape(s, {1, s.dim(0), s.dim(1), s.dim(2)}));
  }
  // top-down: coarse levels are added into finer ones
  for (std::size_t i = levels - 1; i-- > 0;)
    lat[i] = ops::add(lat[i], ops::bilinear_upsample(lat[i + 1], lat[i].dim(2), lat[i].dim(3)));

  const std::size_t h = lat[0].dim(2), w = lat[0].dim(3);
  std::vector<Tensor> parts;
  for (std::size_t i = 0; i < levels; ++i) parts.push_back(i == 0 ? lat[0] : ops::bilinear_upsample(lat[i], h, w));
  Tensor fused = ops::relu(fuse_.forward(ops::concat(parts, 1)));
  return ops::reshape(fused, {fused.dim(1), h, w});
}

Tensor UperNetLiteDecoder::head(const Tensor& input, std::size_t out_h, std::size_t out_w) const {
  return ops::bilinear_upsample(head_.forward(input), out_h, out_w);
}

void UperNetLiteDecoder::collect(ParamList& out) const {
  for (std::size_t i = 0; i < laterals_.size(); ++i) laterals_[i].collect("lateral." + std::to_string(i), out);
  fuse_.collect("fuse", out);
  head_.collect("head", out);
}

MaskTransformerDecoder::MaskTransformerDecoder(const FeatureSpec& spec, std::size_t classes,
                                               const DecoderConfig& config, num::Rng& rng)
    : spec_(spec), dim_(config.dim) {
  if (classes == 0) throw std::invalid_argument("class_count must be positive");
  if (config.heads == 0 || dim_ % config.heads != 0) throw std::invalid_argument("dim must be divisible by heads");
  proj_ = Linear(rng, spec.channels, dim_);
  class_embeddings_ = trunc_normal(rng, {classes, dim_});
  for (std::size_t i = 0; i < config.depth; ++i) blocks_.emplace_back(rng, dim_, config.heads);
  norm_ = LayerNorm(dim_);
}

Tensor MaskTransformerDecoder::head_input(const Features& features) const {
  check_features(spec_, features);
  return proj_.forward(features.token_sequence());  // [T, dim]
}

Tensor MaskTransformerDecoder::head(const Tensor& input, std::size_t out_h, std::size_t out_w) const {
  const std::size_t t = input.dim(0);
  const std::size_t k = class_embeddings_.dim(0);
  Tensor x = ops::concat({input, class_embeddings_}, 0);
  for (const auto& block : blocks_) x = block.forward(x);
  x = norm_.forward(x);
  Tensor patches = ops::narrow(x, 0, 0, t);
  Tensor classes = ops::narrow(x, 0, t, k);
  // the dot product is linear in the patch token, so it commutes with bilinear upsampling
  Tensor logits = ops::matmul(classes, ops::transpose(patches, 0, 1));  // [K, T]
  logits = ops::scale(logits, 1.0f / std::sqrt(static_cast<float>(dim_)));
  return ops::bilinear_upsample(ops::reshape(logits, {k, spec_.grid_h, spec_.grid_w}), out_h, out_w);
}

void MaskTransformerDecoder::collect(ParamList& out) const {
  proj_.collect("proj", out);
  out.push_back({"class_embeddings", class_embeddings_, ParamRole::class_embedding});
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect("blocks." + std::to_string(i), out);
  norm_.collect("norm", out);
}

std::unique_ptr<Decoder> build_decoder(const DecoderConfig& config, const FeatureSpec& spec, std::size_t classes,
                                       num::Rng& rng) {
  switch (config.kind) {
    case DecoderKind::linear:
      return std::make_unique<LinearDecoder>(spec, classes, rng);
    case DecoderKind::upernet_lite:
      return std::make_unique<UperNetLiteDecoder>(spec, classes, config.upernet_channels, rng);
    case DecoderKind::mask_transformer_lite:
      return std::make_unique<MaskTransformerDecoder>(spec, classes, config, rng);
  }
  throw std::invalid_argument("unknown decoder kind");
}

}  // namespace gfss::models
