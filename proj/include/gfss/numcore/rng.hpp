#pragma once

#include <cstdint>

namespace gfss::num {

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from (seed, stream index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Counter-based generator: draw i is splitmix64(seed + (i+1)*gamma).
/// Streams are identical on every platform; no std:: distributions are used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  double uniform();                           // [0, 1)
  std::uint64_t uniform_int(std::uint64_t n);  // [0, n)
  double normal();                            // Box-Muller, standard normal
  double truncated_normal(double stddev, double bound_in_stddevs = 2.0);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gfss::num
