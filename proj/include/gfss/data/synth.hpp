#pragma once

#include <array>
#include <cstdint>

#include "gfss/data/dataset.hpp"

namespace gfss::data {

enum class ShapeKind { disc, square, triangle, diamond, ring };

struct SynthConfig {
  std::size_t image_size = 64;
  std::size_t class_count = 20;
  std::size_t images_per_class = 40;
  std::size_t min_shapes = 1;
  std::size_t max_shapes = 3;
  double noise_std = 0.05;
  std::uint64_t seed = 1;

  std::size_t image_count() const { return class_count * images_per_class; }
  void validate() const;  // throws std::invalid_argument
};

/// Number of distinct (shape, hue) classes the generator can draw.
std::size_t max_synth_classes();
ShapeKind class_shape(std::uint8_t id);
std::array<float, 3> class_color(std::uint8_t id);

/// Image i features class (i mod class_count)+1 drawn on top, plus up to
/// max_shapes-1 other random instances. Each image has its own seed stream.
Sample generate_sample(const SynthConfig& config, std::size_t index);
Dataset generate(const SynthConfig& config);

}  // namespace gfss::data
