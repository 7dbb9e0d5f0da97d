#include "gfss/fewshot/augment.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gfss/numcore/rng.hpp"

namespace gfss::fewshot {

using models::ParamRef;
using models::ParamRole;
using num::Tensor;

namespace {

double population_std(std::span<const float> v) {
  double mean = 0.0;
  for (float x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (float x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(v.size()));
}

// rows [R,C] -> [R+extra, C]; new rows ~ N(0, std(rows))
Tensor append_rows(const Tensor& rows, std::size_t extra, num::Rng& rng) {
  const std::size_t r = rows.dim(0), c = rows.dim(1);
  double s = population_std(rows.data());
  if (!(s > 0.0)) s = 0.02;
  Tensor out({r + extra, c});
  auto d = out.data();
  std::copy(rows.data().begin(), rows.data().end(), d.begin());
  for (std::size_t i = r * c; i < d.size(); ++i) d[i] = static_cast<float>(rng.normal() * s);
  out.set_requires_grad(rows.requires_grad());
  return out;
}

void check_rows(std::size_t rows, const ClassSplit& split, const char* what) {
  if (rows != split.base_channels())
    throw std::invalid_argument(std::string(what) + " has " + std::to_string(rows) + " rows, expected 1+|Cb| = " +
                                std::to_string(split.base_channels()));
}

}  // namespace

void augment_classifier(models::ClassifierHead& head, const ClassSplit& split, std::uint64_t seed) {
  check_rows(head.classes(), split, "classifier head");
  num::Rng rng(seed);
  head.weight = append_rows(head.weight, split.novel_count(), rng);
  Tensor bias({split.channel_count()}, 0.0f);
  std::copy(head.bias.data().begin(), head.bias.data().end(), bias.data().begin());
  bias.set_requires_grad(head.bias.requires_grad());
  head.bias = bias;
}

void augment_linear_decoder(models::Decoder& decoder, const ClassSplit& split, std::uint64_t seed) {
  if (auto* lin = dynamic_cast<models::LinearDecoder*>(&decoder)) return augment_classifier(lin->classifier(), split, seed);
  if (auto* up = dynamic_cast<models::UperNetLiteDecoder*>(&decoder)) return augment_classifier(up->classifier(), split, seed);
  throw std::invalid_argument("decoder has no classifier head to augment");
}

void augment_mask_transformer(models::MaskTransformerDecoder& decoder, const ClassSplit& split, std::uint64_t seed) {
  check_rows(decoder.class_embeddings().dim(0), split, "class embedding table");
  num::Rng rng(seed);
  decoder.class_embeddings() = append_rows(decoder.class_embeddings(), split.novel_count(), rng);
}

void augment_model(models::SegModel& model, const ClassSplit& split, std::uint64_t seed) {
  if (auto* mt = dynamic_cast<models::MaskTransformerDecoder*>(&model.decoder()))
    augment_mask_transformer(*mt, split, seed);
  else
    augment_linear_decoder(model.decoder(), split, seed);
  apply_adaptation_freeze(model);
}

void apply_base_training_freeze(models::SegModel& model) {
  model.set_all_trainable(true);
  if (models::is_vit(model.encoder().kind())) model.set_encoder_trainable(false);
}

void apply_adaptation_freeze(models::SegModel& model) {
  model.set_all_trainable(false);
  const bool mask_transformer = model.decoder().kind() == models::DecoderKind::mask_transformer_lite;
  for (auto& p : model.decoder_parameters()) {
    const bool train = mask_transformer ? (p.role == ParamRole::class_embedding || p.role == ParamRole::layer_norm)
                                        : p.role == ParamRole::classifier_head;
    p.tensor.set_requires_grad(train);
  }
}

}  // namespace gfss::fewshot
