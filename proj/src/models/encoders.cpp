#include <stdexcept>
#include <string>

#include "gfss/models/encoder.hpp"

namespace gfss::models {

namespace ops = gfss::num;

Tensor Features::final_map() const {
  if (multi_scale()) return stages.back();
  // tokens [T,D] -> [D,h,w]
  return ops::reshape(ops::transpose(tokens, 0, 1), {tokens.dim(1), grid_h, grid_w});
}

Tensor Features::token_sequence() const {
  if (!multi_scale()) return tokens;
  const Tensor& last = stages.back();
  return ops::transpose(ops::reshape(last, {last.dim(0), last.dim(1) * last.dim(2)}), 0, 1);
}

Features Features::detached() const {
  Features out;
  out.grid_h = grid_h;
  out.grid_w = grid_w;
  for (const auto& s : stages) out.stages.push_back(s.detach());
  if (tokens.defined()) out.tokens = tokens.detach();
  return out;
}

namespace {

std::size_t vit_default_dim(EncoderKind kind) { return kind == EncoderKind::tiny_vit_b ? 128 : 64; }

void check_image(const Tensor& image, std::size_t size) {
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != size || image.dim(2) != size)
    throw std::invalid_argument("encoder expects image [3," + std::to_string(size) + "," + std::to_string(size) + "]");
}

}  // namespace

VitEncoder::VitEncoder(const EncoderConfig& config, num::Rng& rng)
    : kind_(config.kind),
      image_size_(config.image_size),
      patch_(config.patch_size),
      dim_(config.dim ? config.dim : vit_default_dim(config.kind)),
      grid_(0) {
  if (!is_vit(kind_)) throw std::invalid_argument("VitEncoder needs a ViT kind");
  if (patch_ == 0 || image_size_ % patch_ != 0)
    throw std::invalid_argument("image size must be a multiple of the patch size");
  if (config.heads == 0 || dim_ % config.heads != 0) throw std::invalid_argument("dim must be divisible by heads");
  grid_ = image_size_ / patch_;
  patch_embed_ = Conv2d(rng, 3, dim_, patch_, patch_, 0);
  pos_embed_ = trunc_normal(rng, {grid_ * grid_, dim_});
  for (std::size_t i = 0; i < config.depth; ++i) blocks_.emplace_back(rng, dim_, config.heads);
  norm_ = LayerNorm(dim_);
}

FeatureSpec VitEncoder::spec() const { return {false, {}, dim_, grid_, grid_}; }

Features VitEncoder::forward(const Tensor& image) const {
  check_image(image, image_size_);
  const std::size_t t = grid_ * grid_;
  Tensor x = patch_embed_.forward(ops::reshape(image, {1, 3, image_size_, image_size_}));
  x = ops::transpose(ops::reshape(x, {dim_, t}), 0, 1);  // [T,D]
  x = ops::add(x, pos_embed_);
  for (const auto& block : blocks_) x = block.forward(x);
  Features f;
  f.tokens = norm_.forward(x);
  f.grid_h = grid_;
  f.grid_w = grid_;
  return f;
}

void VitEncoder::collect(ParamList& out) const {
  patch_embed_.collect("patch_embed", out);
  out.push_back({"pos_embed", pos_embed_});
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect("blocks." + std::to_string(i), out);
  norm_.collect("norm", out);
}

CnnEncoder::CnnEncoder(const EncoderConfig& config, num::Rng& rng)
    : kind_(config.kind), image_size_(config.image_size), widths_{16, 32, 64, 128} {
  if (is_vit(kind_)) throw std::invalid_argument("CnnEncoder needs a CNN kind");
  if (image_size_ == 0 || image_size_ % kStride != 0)
    throw std::invalid_argument("image size must be a multiple of " + std::to_string(kStride));
  const std::size_t blocks = kind_ == EncoderKind::tiny_cnn_large ? 3 : 2;
  stem_ = Conv2d(rng, 3, widths_[0], 3, 1, 1);
  std::size_t in = widths_[0];
  for (std::size_t s = 0; s < widths_.size(); ++s) {
    std::vector<Block> stage;
    for (std::size_t b = 0; b < blocks; ++b) {
      const bool down = b == 0 && s > 0;
      const std::size_t out = widths_[s];
      Block block{Conv2d(rng, in, out, 3, down ? 2 : 1, 1), Conv2d(rng, out, out, 3, 1, 1), down || in != out, {}};
      if (block.has_projection) block.projection = Conv2d(rng, in, out, 1, down ? 2 : 1, 0);
      stage.push_back(std::move(block));
      in = out;
    }
    stages_.push_back(std::move(stage));
  }
}

FeatureSpec CnnEncoder::spec() const {
  const std::size_t g = image_size_ / kStride;
  return {true, widths_, widths_.back(), g, g};
}

Features CnnEncoder::forward(const Tensor& image) const {
  check_image(image, image_size_);
  Tensor x = ops::reshape(image, {1, 3, image_size_, image_size_});
  x = ops::max_pool2d(ops::relu(stem_.forward(x)), 2, 2);
  Features f;
  for (const auto& stage : stages_) {
    for (const auto& block : stage) {
      Tensor h = block.conv2.forward(ops::relu(block.conv1.forward(x)));
      Tensor skip = block.has_projection ? block.projection.forward(x) : x;
      x = ops::relu(ops::add(h, skip));
    }
    f.stages.push_back(ops::reshape(x, {x.dim(1), x.dim(2), x.dim(3)}));
  }
  f.grid_h = x.dim(2);
  f.grid_w = x.dim(3);
  return f;
}

void CnnEncoder::collect(ParamList& out) const {
  stem_.collect("stem", out);
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    for (std::size_t b = 0; b < stages_[s].size(); ++b) {
      const std::string p = "stages." + std::to_string(s) + "." + std::to_string(b);
      stages_[s][b].conv1.collect(p + ".conv1", out);
      stages_[s][b].conv2.collect(p + ".conv2", out);
      if (stages_[s][b].has_projection) stages_[s][b].projection.collect(p + ".proj", out);
    }
  }
}

std::unique_ptr<Encoder> build_encoder(const EncoderConfig& config, num::Rng& rng) {
  if (is_vit(config.kind)) return std::make_unique<VitEncoder>(config, rng);
  return std::make_unique<CnnEncoder>(config, rng);
}

}  // namespace gfss::models
