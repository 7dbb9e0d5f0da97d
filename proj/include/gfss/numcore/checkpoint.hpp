#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gfss/numcore/tensor.hpp"

namespace gfss::num {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using StateDict = std::vector<NamedTensor>;

inline constexpr std::string_view kCheckpointMagic = "GFSSCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (little-endian): magic, u32 version, then until EOF one record per
// tensor: u32 name length, UTF-8 name, u32 rank, rank x u64 extents, f32 payload.
std::string serialize_checkpoint(const StateDict& state);
StateDict deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const StateDict& state);
StateDict load_checkpoint(const std::filesystem::path& path);

}  // namespace gfss::num
