#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace csum {

// Seeded RNG wrapper. Distribution mapping is hand-rolled (not
// std::uniform_*_distribution) so that sequences are identical across
// standard library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(static_cast<std::uint32_t>(seed)) {}

  std::uint32_t next_u32() { return gen_(); }

  /// Uniform in [0, 1), 24 bits of resolution.
  double next_unit() { return (gen_() >> 8) * (1.0 / 16777216.0); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_()) % n; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937 gen_;
};

}  // namespace csum
