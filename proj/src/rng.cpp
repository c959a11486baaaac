#include "pbdtest/rng.hpp"

namespace pbdtest {

std::uint64_t SplitMix64::below(std::uint64_t bound) {
  if (bound == 0) return 0;
  unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>((*this)()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t id) {
  // Two rounds so that nearby (seed, id) pairs land far apart.
  return SplitMix64::mix(SplitMix64::mix(seed ^ 0x6A09E667F3BCC909ULL) + id * SplitMix64::kGamma);
}

}  // namespace pbdtest
