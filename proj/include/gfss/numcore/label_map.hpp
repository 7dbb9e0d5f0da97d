#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace gfss::num {

inline constexpr std::uint8_t kIgnoreId = 255;

/// Per-pixel integer labels, row-major H x W.
struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> ids;

  LabelMap() = default;
  LabelMap(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), ids(h * w, fill) {}

  std::size_t size() const { return ids.size(); }
  std::uint8_t& at(std::size_t y, std::size_t x) { return ids[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return ids[y * width + x]; }
  bool operator==(const LabelMap&) const = default;
};

}  // namespace gfss::num
