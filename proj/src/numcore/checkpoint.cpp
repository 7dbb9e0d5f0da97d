#include "gfss/numcore/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gfss/numcore/binary_io.hpp"

namespace gfss::num {

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string serialize_checkpoint(const StateDict& state) {
  ByteWriter w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  for (const auto& [name, tensor] : state) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u32(static_cast<std::uint32_t>(tensor.rank()));
    for (auto e : tensor.shape()) w.u64(e);
    w.f32s(tensor.data());
  }
  return w.take();
}

StateDict deserialize_checkpoint(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kCheckpointMagic.size() || r.bytes(kCheckpointMagic.size()) != kCheckpointMagic)
    throw std::runtime_error("not a checkpoint: bad magic");
  const auto version = r.u32();
  if (version != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  StateDict state;
  while (!r.at_end()) {
    NamedTensor nt;
    const auto len = r.u32();
    nt.name = std::string(r.bytes(len));
    const auto rank = r.u32();
    if (rank == 0 || rank > 8) throw std::runtime_error("checkpoint: bad rank for " + nt.name);
    Shape shape(rank);
    for (auto& e : shape) e = r.u64();
    const std::size_t n = shape_numel(shape);
    if (n * 4 > r.remaining()) throw std::runtime_error("checkpoint: truncated payload for " + nt.name);
    std::vector<float> data(n);
    for (auto& v : data) v = r.f32();
    nt.tensor = Tensor(std::move(shape), std::move(data));
    state.push_back(std::move(nt));
  }
  return state;
}

void save_checkpoint(const std::filesystem::path& path, const StateDict& state) {
  write_file_atomic(path, serialize_checkpoint(state));
}

StateDict load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_file_bytes(path)); }

}  // namespace gfss::num
