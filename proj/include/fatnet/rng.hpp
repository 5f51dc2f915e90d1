#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fatnet {

using Rng = std::mt19937_64;

// Uniform in [0, 1) from the top 53 bits; identical across standard libraries,
// unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform integer in [0, n), rejection sampled so the result is unbiased and
// portable.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Standard normal via Box-Muller on uniform01.
double normal01(Rng& rng);

// Derives a named, independent sub-stream from one global seed. Stream names
// used by the library: "weights-init", "batch-shuffle", "injection-values",
// "fat2-layer-choice", "eval-subset", "data-split".
Rng substream(std::uint64_t seed, std::string_view name);

// In-place Fisher-Yates shuffle driven by uniform_index.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, i);
    std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1), first + static_cast<std::ptrdiff_t>(j));
  }
}

}  // namespace fatnet
