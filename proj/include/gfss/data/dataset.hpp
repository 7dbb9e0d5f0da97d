#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gfss/numcore/label_map.hpp"
#include "gfss/numcore/tensor.hpp"

namespace gfss::data {

using num::LabelMap;

struct Sample {
  std::vector<float> image;  // [3, H, W] in [0, 1]
  LabelMap mask;             // class ids, 255 = ignore

  std::size_t height() const { return mask.height; }
  std::size_t width() const { return mask.width; }
  num::Tensor image_tensor() const { return num::Tensor({3, height(), width()}, image); }
  bool operator==(const Sample&) const = default;
};

struct Dataset {
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  bool operator==(const Dataset&) const = default;
};

inline constexpr std::string_view kDatasetMagic = "GFSSDATA";
inline constexpr std::uint32_t kDatasetVersion = 1;

std::string serialize_dataset(const Dataset& dataset);
Dataset deserialize_dataset(std::string_view bytes);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace gfss::data
