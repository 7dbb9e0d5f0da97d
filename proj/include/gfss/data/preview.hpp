#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "gfss/data/dataset.hpp"

namespace gfss::data {

/// Interleaved 8-bit RGB raster.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};

/// Fixed 21-entry palette for ids 0..20; other ids wrap, 255 renders white.
std::array<std::uint8_t, 3> palette_color(std::uint8_t id);

RgbImage render_image(const Sample& sample);
RgbImage render_mask(const LabelMap& mask);
/// Image blended 50/50 with the palette colors of `labels`; background pixels
/// keep the plain image.
RgbImage render_overlay(const Sample& sample, const LabelMap& labels);

void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace gfss::data
