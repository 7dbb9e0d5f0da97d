#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gfss/data/dataset.hpp"
#include "gfss/models/encoder.hpp"
#include "gfss/numcore/sgd.hpp"

namespace gfss::fewshot {

// Stand-in for a pretrained backbone: the encoder and a throwaway per-token
// classifier are trained on masks reduced to the token grid (majority vote per
// cell), with every class labeled.
struct PretrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  num::SgdConfig sgd{0.02, 0.9, 1e-4};
  std::uint64_t seed = 11;

  void validate() const;
};

struct PretrainResult {
  std::vector<double> losses;     // mean loss per epoch
  double token_accuracy = 0.0;    // on the training set after the last epoch
};

/// Majority id per grid cell (ignore pixels do not vote; ties -> lowest id;
/// all-ignore cells -> 255).
num::LabelMap downsample_majority(const num::LabelMap& mask, std::size_t grid_h, std::size_t grid_w);

/// `class_count` excludes background; ids 0..class_count are trained.
PretrainResult pretrain_encoder(models::Encoder& encoder, const data::Dataset& data, std::size_t class_count,
                                const PretrainConfig& config,
                                const std::function<void(std::size_t, double)>& on_epoch = {});

}  // namespace gfss::fewshot
