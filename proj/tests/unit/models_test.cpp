#include <gtest/gtest.h>

#include <set>

#include "gfss/models/seg_model.hpp"
#include "gfss/numcore/ops.hpp"
#include "gfss/numcore/rng.hpp"

namespace gfss::models {
namespace {

Tensor random_image(std::uint64_t seed, std::size_t size = 64) {
  num::Rng rng(seed);
  Tensor t({3, size, size});
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform());
  return t;
}

ModelConfig config(EncoderKind enc, DecoderKind dec, std::size_t classes = 16) {
  ModelConfig c;
  c.encoder.kind = enc;
  c.decoder.kind = dec;
  c.class_count = classes;
  return c;
}

std::size_t encoder_params(EncoderKind kind) {
  num::Rng rng(1);
  EncoderConfig c;
  c.kind = kind;
  ParamList list;
  build_encoder(c, rng)->collect(list);
  return count_elements(list);
}

TEST(Encoder, VitTokenGeometry) {
  num::Rng rng(3);
  EncoderConfig c;
  c.kind = EncoderKind::tiny_vit_a;
  auto enc = build_encoder(c, rng);
  Features f = enc->forward(random_image(1));
  EXPECT_FALSE(f.multi_scale());
  EXPECT_EQ(f.tokens.shape(), (num::Shape{64, 64}));
  EXPECT_EQ(f.grid_h, 8u);
  EXPECT_EQ(f.final_map().shape(), (num::Shape{64, 8, 8}));
}

TEST(Encoder, CnnStageGeometry) {
  num::Rng rng(3);
  EncoderConfig c;
  c.kind = EncoderKind::tiny_cnn_small;
  auto enc = build_encoder(c, rng);
  Features f = enc->forward(random_image(1));
  ASSERT_EQ(f.stages.size(), 4u);
  const std::size_t sizes[] = {32, 16, 8, 4};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(f.stages[i].dim(1), sizes[i]);
    EXPECT_EQ(f.stages[i].dim(2), sizes[i]);
  }
  EXPECT_EQ(f.final_map().shape(), (num::Shape{128, 4, 4}));
  EXPECT_EQ(f.token_sequence().shape(), (num::Shape{16, 128}));
}

TEST(Encoder, ParameterCountOrdering) {
  EXPECT_GT(encoder_params(EncoderKind::tiny_vit_b), encoder_params(EncoderKind::tiny_vit_a));
  EXPECT_GT(encoder_params(EncoderKind::tiny_cnn_large), encoder_params(EncoderKind::tiny_cnn_small));
}

TEST(Encoder, IndivisibleGeometryThrows) {
  num::Rng rng(3);
  EncoderConfig c;
  c.kind = EncoderKind::tiny_vit_a;
  c.image_size = 60;
  EXPECT_THROW(build_encoder(c, rng), std::invalid_argument);
  c.kind = EncoderKind::tiny_cnn_small;
  c.image_size = 40;
  EXPECT_THROW(build_encoder(c, rng), std::invalid_argument);
}

TEST(Encoder, WrongImageShapeThrows) {
  SegModel m(config(EncoderKind::tiny_vit_a, DecoderKind::linear), 1);
  EXPECT_THROW(m.forward(random_image(1, 32)), std::invalid_argument);
}

TEST(Decoder, LinearGeometry) {
  num::Rng rng(5);
  FeatureSpec spec{false, {}, 64, 8, 8};
  LinearDecoder dec(spec, 16, rng);
  Features f;
  f.tokens = Tensor({64, 64}, 0.1f);
  f.grid_h = f.grid_w = 8;
  EXPECT_EQ(dec.forward(f, 64, 64).shape(), (num::Shape{16, 64, 64}));
}

TEST(Decoder, MaskTransformerGeometry) {
  SegModel m(config(EncoderKind::tiny_vit_a, DecoderKind::mask_transformer_lite), 2);
  auto& dec = dynamic_cast<MaskTransformerDecoder&>(m.decoder());
  EXPECT_EQ(dec.class_embeddings().dim(0), 16u);
  EXPECT_EQ(m.forward(random_image(2)).shape(), (num::Shape{16, 64, 64}));
}

TEST(Decoder, UperNetGeometry) {
  SegModel m(config(EncoderKind::tiny_cnn_small, DecoderKind::upernet_lite, 6), 2);
  EXPECT_EQ(m.forward(random_image(2)).shape(), (num::Shape{6, 64, 64}));
}

TEST(Decoder, UperNetRejectsSingleScale) {
  try {
    SegModel m(config(EncoderKind::tiny_vit_a, DecoderKind::upernet_lite), 1);
    FAIL() << "expected an exception";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("requires multi-scale features"), std::string::npos);
  }
}

TEST(Decoder, SpecMismatchThrows) {
  num::Rng rng(5);
  LinearDecoder dec(FeatureSpec{false, {}, 64, 8, 8}, 4, rng);
  Features f;
  f.tokens = Tensor({16, 64});
  f.grid_h = f.grid_w = 4;
  EXPECT_THROW(dec.forward(f, 64, 64), std::invalid_argument);
}

struct Combo {
  EncoderKind enc;
  DecoderKind dec;
};

const Combo kCombos[] = {
    {EncoderKind::tiny_cnn_small, DecoderKind::linear},     {EncoderKind::tiny_cnn_small, DecoderKind::upernet_lite},
    {EncoderKind::tiny_cnn_large, DecoderKind::linear},     {EncoderKind::tiny_cnn_large, DecoderKind::upernet_lite},
    {EncoderKind::tiny_vit_a, DecoderKind::linear},         {EncoderKind::tiny_vit_a, DecoderKind::mask_transformer_lite},
    {EncoderKind::tiny_vit_b, DecoderKind::linear},         {EncoderKind::tiny_vit_b, DecoderKind::mask_transformer_lite},
};

TEST(SegModel, SoftmaxIsSimplexForEveryCombination) {
  for (const auto& c : kCombos) {
    SegModel m(config(c.enc, c.dec, 7), 11);
    Tensor p = num::softmax(m.forward(random_image(4)), 0);
    ASSERT_EQ(p.dim(0), m.class_count());
    const std::size_t hw = p.dim(1) * p.dim(2);
    for (std::size_t i = 0; i < hw; ++i) {
      double s = 0;
      for (std::size_t k = 0; k < 7; ++k) {
        EXPECT_GE(p.at(k * hw + i), 0.0f);
        s += p.at(k * hw + i);
      }
      ASSERT_NEAR(s, 1.0, 1e-6) << to_string(c.enc) << "+" << to_string(c.dec);
    }
  }
}

TEST(SegModel, ParametersAreUniqueAndPartitioned) {
  for (const auto& c : kCombos) {
    SegModel m(config(c.enc, c.dec), 1);
    std::set<std::string> names;
    std::set<const void*> storage;
    for (const auto& p : m.parameters()) {
      EXPECT_TRUE(names.insert(p.name).second) << p.name;
      EXPECT_TRUE(storage.insert(p.tensor.impl()).second) << p.name;
      EXPECT_TRUE(p.name.rfind("encoder.", 0) == 0 || p.name.rfind("decoder.", 0) == 0);
    }
    EXPECT_EQ(m.parameters().size(), m.encoder_parameters().size() + m.decoder_parameters().size());
  }
}

TEST(SegModel, DoublingClassCountOnlyTouchesDecoderHead) {
  for (const auto& c : kCombos) {
    SegModel small(config(c.enc, c.dec, 8), 1);
    SegModel big(config(c.enc, c.dec, 16), 1);
    EXPECT_EQ(count_elements(small.encoder_parameters()), count_elements(big.encoder_parameters()));
    auto a = small.decoder_parameters();
    auto b = big.decoder_parameters();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const bool class_sized = a[i].role == ParamRole::classifier_head || a[i].role == ParamRole::class_embedding;
      if (class_sized) {
        EXPECT_EQ(b[i].tensor.numel(), 2 * a[i].tensor.numel()) << a[i].name;
      } else {
        EXPECT_EQ(b[i].tensor.numel(), a[i].tensor.numel()) << a[i].name;
      }
    }
  }
}

TEST(SegModel, ForwardIsDeterministic) {
  SegModel m(config(EncoderKind::tiny_vit_a, DecoderKind::mask_transformer_lite), 9);
  Tensor img = random_image(7);
  Tensor a = m.forward(img), b = m.forward(img);
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}

TEST(SegModel, SameSeedSameWeights) {
  SegModel a(config(EncoderKind::tiny_cnn_small, DecoderKind::upernet_lite), 4);
  SegModel b(config(EncoderKind::tiny_cnn_small, DecoderKind::upernet_lite), 4);
  auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    EXPECT_TRUE(std::equal(pa[i].tensor.data().begin(), pa[i].tensor.data().end(), pb[i].tensor.data().begin()));
}

TEST(SegModel, StateDictRoundTrip) {
  SegModel a(config(EncoderKind::tiny_vit_a, DecoderKind::linear), 1);
  SegModel b(config(EncoderKind::tiny_vit_a, DecoderKind::linear), 2);
  b.load_state_dict(num::deserialize_checkpoint(num::serialize_checkpoint(a.state_dict())));
  Tensor img = random_image(3);
  Tensor ya = a.forward(img), yb = b.forward(img);
  EXPECT_TRUE(std::equal(ya.data().begin(), ya.data().end(), yb.data().begin()));
}

TEST(SegModel, LoadRejectsMismatch) {
  SegModel a(config(EncoderKind::tiny_vit_a, DecoderKind::linear, 16), 1);
  SegModel b(config(EncoderKind::tiny_vit_a, DecoderKind::linear, 21), 1);
  EXPECT_THROW(b.load_state_dict(a.state_dict()), std::invalid_argument);
  auto state = a.state_dict();
  state.pop_back();
  EXPECT_THROW(a.load_state_dict(state), std::invalid_argument);
}

TEST(SegModel, TrainableMaskFollowsFlags) {
  SegModel m(config(EncoderKind::tiny_vit_a, DecoderKind::linear), 1);
  m.set_encoder_trainable(false);
  EXPECT_EQ(m.trainable_parameters().size(), m.decoder_parameters().size());
  auto mask = m.trainable_mask();
  EXPECT_EQ(mask.size(), m.parameters().size());
  EXPECT_FALSE(mask.front());
  EXPECT_TRUE(mask.back());
}

TEST(Kinds, ParseRoundTrip) {
  for (auto k : {EncoderKind::tiny_cnn_small, EncoderKind::tiny_cnn_large, EncoderKind::tiny_vit_a,
                 EncoderKind::tiny_vit_b})
    EXPECT_EQ(parse_encoder_kind(to_string(k)), k);
  for (auto k : {DecoderKind::linear, DecoderKind::upernet_lite, DecoderKind::mask_transformer_lite})
    EXPECT_EQ(parse_decoder_kind(to_string(k)), k);
  EXPECT_THROW(parse_encoder_kind("resnet"), std::invalid_argument);
}

}  // namespace
}  // namespace gfss::models
