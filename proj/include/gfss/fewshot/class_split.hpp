#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gfss::fewshot {

/// Background / base / novel partition of class ids. Model channels are laid
/// out as [background, base..., novel...].
class ClassSplit {
 public:
  static constexpr std::uint8_t kBackground = 0;

  ClassSplit() = default;
  ClassSplit(std::vector<std::uint8_t> base_ids, std::vector<std::uint8_t> novel_ids)
      : base_(std::move(base_ids)), novel_(std::move(novel_ids)) {
    channel_.fill(-1);
    channel_[kBackground] = 0;
    int next = 1;
    for (auto id : base_) assign(id, next++);
    for (auto id : novel_) assign(id, next++);
  }

  /// Split i of `class_count` classes: novel ids are fold*i+1 .. fold*i+fold,
  /// everything else is base.
  static ClassSplit fold(std::size_t index, std::size_t class_count = 20, std::size_t fold_size = 5) {
    if (fold_size == 0 || (index + 1) * fold_size > class_count || class_count > 254)
      throw std::invalid_argument("split " + std::to_string(index) + " does not fit " + std::to_string(class_count) +
                                  " classes");
    std::vector<std::uint8_t> base, novel;
    for (std::size_t c = 1; c <= class_count; ++c) {
      const bool is_novel = c > index * fold_size && c <= (index + 1) * fold_size;
      (is_novel ? novel : base).push_back(static_cast<std::uint8_t>(c));
    }
    return ClassSplit(std::move(base), std::move(novel));
  }

  const std::vector<std::uint8_t>& base_ids() const { return base_; }
  const std::vector<std::uint8_t>& novel_ids() const { return novel_; }
  std::size_t base_count() const { return base_.size(); }
  std::size_t novel_count() const { return novel_.size(); }
  std::size_t base_channels() const { return 1 + base_.size(); }
  std::size_t channel_count() const { return 1 + base_.size() + novel_.size(); }

  /// Channel of a class id, or -1 if the id is not part of the split.
  int channel_of(std::uint8_t id) const { return channel_[id]; }
  std::uint8_t id_of_channel(std::size_t channel) const {
    if (channel == 0) return kBackground;
    if (channel <= base_.size()) return base_[channel - 1];
    if (channel < channel_count()) return novel_[channel - 1 - base_.size()];
    throw std::out_of_range("channel " + std::to_string(channel) + " outside split");
  }
  bool is_base(std::uint8_t id) const { return channel_[id] >= 1 && channel_[id] <= static_cast<int>(base_.size()); }
  bool is_novel(std::uint8_t id) const { return channel_[id] > static_cast<int>(base_.size()); }

 private:
  void assign(std::uint8_t id, int channel) {
    if (id == kBackground || id == 255) throw std::invalid_argument("ids 0 and 255 cannot be base or novel");
    if (channel_[id] != -1) throw std::invalid_argument("class id " + std::to_string(id) + " listed twice");
    channel_[id] = channel;
  }

  std::vector<std::uint8_t> base_;
  std::vector<std::uint8_t> novel_;
  std::array<int, 256> channel_{};
};

}  // namespace gfss::fewshot
