#include "gfss/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gfss/numcore/rng.hpp"

namespace gfss::data {

namespace {

constexpr std::array<std::array<float, 3>, 22> kHues = {{
    {0.90f, 0.10f, 0.10f}, {0.10f, 0.30f, 0.90f}, {0.10f, 0.75f, 0.15f}, {0.95f, 0.85f, 0.10f},
    {0.60f, 0.10f, 0.80f}, {0.10f, 0.85f, 0.85f}, {0.95f, 0.50f, 0.05f}, {0.90f, 0.20f, 0.60f},
    {0.45f, 0.25f, 0.05f}, {0.55f, 0.90f, 0.10f}, {0.05f, 0.15f, 0.45f}, {1.00f, 0.60f, 0.70f},
    {0.00f, 0.50f, 0.45f}, {0.55f, 0.00f, 0.10f}, {0.75f, 0.65f, 1.00f}, {0.40f, 0.45f, 0.00f},
    {1.00f, 0.95f, 0.55f}, {0.25f, 0.00f, 0.40f}, {0.00f, 0.60f, 1.00f}, {0.85f, 0.55f, 0.35f},
    {0.35f, 1.00f, 0.55f}, {0.70f, 0.00f, 0.35f},
}};

bool inside(ShapeKind kind, double dx, double dy, double r) {
  switch (kind) {
    case ShapeKind::disc:
      return dx * dx + dy * dy <= r * r;
    case ShapeKind::square:
      return std::abs(dx) <= 0.85 * r && std::abs(dy) <= 0.85 * r;
    case ShapeKind::triangle: {
      // apex up, base at dy = 0.8r
      if (dy < -r || dy > 0.8 * r) return false;
      const double half = (dy + r) / 1.8;
      return std::abs(dx) <= half;
    }
    case ShapeKind::diamond:
      return std::abs(dx) + std::abs(dy) <= 1.1 * r;
    case ShapeKind::ring: {
      const double d2 = dx * dx + dy * dy;
      return d2 <= r * r && d2 >= 0.3 * r * r;
    }
  }
  return false;
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

}  // namespace

std::size_t max_synth_classes() { return kHues.size(); }

ShapeKind class_shape(std::uint8_t id) {
  if (id == 0) throw std::invalid_argument("background has no shape");
  return static_cast<ShapeKind>((id - 1) % 5);
}

std::array<float, 3> class_color(std::uint8_t id) {
  if (id == 0 || id > kHues.size()) throw std::out_of_range("no hue for class " + std::to_string(id));
  return kHues[id - 1];
}

void SynthConfig::validate() const {
  if (class_count == 0) throw std::invalid_argument("class_count must be positive");
  if (class_count > max_synth_classes())
    throw std::invalid_argument("class_count " + std::to_string(class_count) + " exceeds the " +
                                std::to_string(max_synth_classes()) + " available shape/hue combinations");
  if (image_size < 16) throw std::invalid_argument("image_size must be at least 16");
  if (images_per_class == 0) throw std::invalid_argument("images_per_class must be positive");
  if (min_shapes == 0 || min_shapes > max_shapes) throw std::invalid_argument("need 1 <= min_shapes <= max_shapes");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw std::invalid_argument("noise_std must be >= 0");
}

Sample generate_sample(const SynthConfig& cfg, std::size_t index) {
  num::Rng rng(num::derive_seed(cfg.seed, index));
  const std::size_t n = cfg.image_size;
  const double size = static_cast<double>(n);
  Sample s;
  s.image.assign(3 * n * n, 0.0f);
  s.mask = LabelMap(n, n, 0);

  // muted background with a random stripe texture
  const double gray = 0.3 + 0.3 * rng.uniform();
  std::array<double, 3> bg;
  for (auto& c : bg) c = gray + 0.08 * (rng.uniform() - 0.5);
  const double angle = std::numbers::pi * rng.uniform();
  const double freq = 2.0 * std::numbers::pi * (2.0 + 4.0 * rng.uniform()) / size;
  const double phase = 2.0 * std::numbers::pi * rng.uniform();
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const double t = 0.07 * std::sin(freq * (std::cos(angle) * x + std::sin(angle) * y) + phase);
      for (std::size_t c = 0; c < 3; ++c) s.image[(c * n + y) * n + x] = static_cast<float>(bg[c] + t);
    }

  const std::size_t span = cfg.max_shapes - cfg.min_shapes + 1;
  const std::size_t count = cfg.min_shapes + rng.uniform_int(span);
  std::vector<std::uint8_t> classes;
  for (std::size_t i = 1; i < count; ++i) classes.push_back(static_cast<std::uint8_t>(1 + rng.uniform_int(cfg.class_count)));
  classes.push_back(static_cast<std::uint8_t>(index % cfg.class_count + 1));

  for (auto id : classes) {
    const double r = size * (0.14 + 0.14 * rng.uniform());
    const double cx = r * 0.5 + (size - r) * rng.uniform();
    const double cy = r * 0.5 + (size - r) * rng.uniform();
    const auto base = class_color(id);
    std::array<double, 3> color;
    for (std::size_t c = 0; c < 3; ++c) color[c] = base[c] + 0.06 * (rng.uniform() - 0.5);
    const double shade = 0.1 * (rng.uniform() - 0.5);
    const ShapeKind kind = class_shape(id);
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        if (!inside(kind, dx, dy, r)) continue;
        s.mask.at(y, x) = id;
        const double g = shade * (dx + dy) / r;  // soft lighting gradient
        for (std::size_t c = 0; c < 3; ++c) s.image[(c * n + y) * n + x] = static_cast<float>(color[c] + g);
      }
  }

  for (auto& v : s.image) v = clamp01(v + cfg.noise_std * rng.normal());
  return s;
}

Dataset generate(const SynthConfig& cfg) {
  cfg.validate();
  Dataset out;
  out.samples.reserve(cfg.image_count());
  for (std::size_t i = 0; i < cfg.image_count(); ++i) out.samples.push_back(generate_sample(cfg, i));
  return out;
}

}  // namespace gfss::data
