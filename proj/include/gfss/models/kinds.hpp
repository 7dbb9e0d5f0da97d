#pragma once

#include <string>
#include <string_view>

namespace gfss::models {

enum class EncoderKind { tiny_cnn_small, tiny_cnn_large, tiny_vit_a, tiny_vit_b };
enum class DecoderKind { linear, upernet_lite, mask_transformer_lite };

std::string to_string(EncoderKind kind);
std::string to_string(DecoderKind kind);
EncoderKind parse_encoder_kind(std::string_view text);
DecoderKind parse_decoder_kind(std::string_view text);

inline bool is_vit(EncoderKind kind) { return kind == EncoderKind::tiny_vit_a || kind == EncoderKind::tiny_vit_b; }

}  // namespace gfss::models
