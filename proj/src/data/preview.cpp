#include "gfss/data/preview.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace gfss::data {

std::array<std::uint8_t, 3> palette_color(std::uint8_t id) {
  if (id == num::kIgnoreId) return {255, 255, 255};
  // bit-interleaved colormap used by common segmentation tooling
  const unsigned idx = id % 21;
  std::array<std::uint8_t, 3> rgb{0, 0, 0};
  unsigned c = idx;
  for (int shift = 7; shift >= 0 && c; --shift, c >>= 3) {
    rgb[0] |= static_cast<std::uint8_t>(((c >> 0) & 1) << shift);
    rgb[1] |= static_cast<std::uint8_t>(((c >> 1) & 1) << shift);
    rgb[2] |= static_cast<std::uint8_t>(((c >> 2) & 1) << shift);
  }
  return rgb;
}

RgbImage render_image(const Sample& sample) {
  const std::size_t h = sample.height(), w = sample.width();
  RgbImage out{w, h, std::vector<std::uint8_t>(3 * h * w)};
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = sample.image[(c * h + y) * w + x];
        out.pixels[(y * w + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(255.0f * std::clamp(v, 0.0f, 1.0f)));
      }
  return out;
}

RgbImage render_mask(const LabelMap& mask) {
  RgbImage out{mask.width, mask.height, std::vector<std::uint8_t>(3 * mask.size())};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const auto rgb = palette_color(mask.ids[i]);
    for (std::size_t c = 0; c < 3; ++c) out.pixels[i * 3 + c] = rgb[c];
  }
  return out;
}

RgbImage render_overlay(const Sample& sample, const LabelMap& labels) {
  if (labels.height != sample.height() || labels.width != sample.width())
    throw std::invalid_argument("overlay geometry mismatch");
  RgbImage out = render_image(sample);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.ids[i] == 0) continue;
    const auto rgb = palette_color(labels.ids[i]);
    for (std::size_t c = 0; c < 3; ++c)
      out.pixels[i * 3 + c] = static_cast<std::uint8_t>((out.pixels[i * 3 + c] + rgb[c] + 1) / 2);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  if (image.pixels.size() != 3 * image.width * image.height) throw std::invalid_argument("RGB buffer size mismatch");
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < image.height; ++y)
    png_write_row(png, const_cast<png_bytep>(image.pixels.data() + y * image.width * 3));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace gfss::data
