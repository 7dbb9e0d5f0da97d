#include "gfss/data/dataset.hpp"

#include <stdexcept>

#include "gfss/numcore/binary_io.hpp"

namespace gfss::data {

std::string serialize_dataset(const Dataset& dataset) {
  num::ByteWriter w;
  w.bytes(kDatasetMagic);
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(dataset.size()));
  for (const auto& s : dataset.samples) {
    if (s.image.size() != 3 * s.height() * s.width() || s.mask.ids.size() != s.height() * s.width())
      throw std::invalid_argument("sample buffers do not match its geometry");
    w.u32(static_cast<std::uint32_t>(s.height()));
    w.u32(static_cast<std::uint32_t>(s.width()));
    w.f32s(s.image);
    for (auto id : s.mask.ids) w.u8(id);
  }
  return w.take();
}

Dataset deserialize_dataset(std::string_view bytes) {
  num::ByteReader r(bytes);
  if (r.remaining() < kDatasetMagic.size() || r.bytes(kDatasetMagic.size()) != kDatasetMagic)
    throw std::runtime_error("not a dataset file (bad magic)");
  if (const auto v = r.u32(); v != kDatasetVersion)
    throw std::runtime_error("unsupported dataset version " + std::to_string(v));
  const std::uint32_t count = r.u32();
  Dataset out;
  out.samples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t h = r.u32(), w = r.u32();
    if (r.remaining() < h * w * 13) throw std::runtime_error("truncated binary input");
    Sample s;
    s.image.resize(3 * h * w);
    for (auto& v : s.image) v = r.f32();
    s.mask = LabelMap(h, w);
    for (auto& id : s.mask.ids) id = r.u8();
    out.samples.push_back(std::move(s));
  }
  if (!r.at_end()) throw std::runtime_error("trailing bytes after dataset records");
  return out;
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  num::write_file_atomic(path, serialize_dataset(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) { return deserialize_dataset(num::read_file_bytes(path)); }

}  // namespace gfss::data
