#pragma once

#include <cstdint>

#include "gfss/fewshot/class_split.hpp"
#include "gfss/models/seg_model.hpp"

namespace gfss::fewshot {

/// Appends |Cn| prototype rows to a classifier head with 1+|Cb| rows. New
/// weights are zero-mean Gaussian with the empirical std of the base rows;
/// new biases are 0. Existing rows are copied bitwise.
void augment_classifier(models::ClassifierHead& head, const ClassSplit& split, std::uint64_t seed);

/// Works on linear and upernet_lite decoders (both end in a classifier head).
void augment_linear_decoder(models::Decoder& decoder, const ClassSplit& split, std::uint64_t seed);

/// Appends |Cn| class embeddings, initialized like the prototype rows above.
void augment_mask_transformer(models::MaskTransformerDecoder& decoder, const ClassSplit& split, std::uint64_t seed);

/// Augments the decoder of `model` and sets the adaptation trainability:
/// linear / upernet_lite train only the classifier head, mask_transformer_lite
/// trains its class embeddings and its layer-norm parameters.
void augment_model(models::SegModel& model, const ClassSplit& split, std::uint64_t seed);

/// Base-training trainability: ViT encoders are frozen, CNN encoders train.
void apply_base_training_freeze(models::SegModel& model);

/// Adaptation trainability for an already augmented model (see augment_model).
void apply_adaptation_freeze(models::SegModel& model);

}  // namespace gfss::fewshot
