#include "gfss/models/kinds.hpp"

#include <stdexcept>

namespace gfss::models {

std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::tiny_cnn_small: return "tiny_cnn_small";
    case EncoderKind::tiny_cnn_large: return "tiny_cnn_large";
    case EncoderKind::tiny_vit_a: return "tiny_vit_a";
    case EncoderKind::tiny_vit_b: return "tiny_vit_b";
  }
  return "unknown";
}

std::string to_string(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::linear: return "linear";
    case DecoderKind::upernet_lite: return "upernet_lite";
    case DecoderKind::mask_transformer_lite: return "mask_transformer_lite";
  }
  return "unknown";
}

EncoderKind parse_encoder_kind(std::string_view text) {
  for (auto k : {EncoderKind::tiny_cnn_small, EncoderKind::tiny_cnn_large, EncoderKind::tiny_vit_a,
                 EncoderKind::tiny_vit_b})
    if (to_string(k) == text) return k;
  throw std::invalid_argument("unknown encoder kind '" + std::string(text) + "'");
}

DecoderKind parse_decoder_kind(std::string_view text) {
  for (auto k : {DecoderKind::linear, DecoderKind::upernet_lite, DecoderKind::mask_transformer_lite})
    if (to_string(k) == text) return k;
  throw std::invalid_argument("unknown decoder kind '" + std::string(text) + "'");
}

}  // namespace gfss::models
