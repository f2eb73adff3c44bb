#pragma once

#include <cstdint>
#include <random>

namespace optree {

using Rng = std::mt19937_64;

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based child seed: stream i of a master seed is independent of how
/// many other streams were consumed, so serial and parallel runs agree.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

[[nodiscard]] inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
  return Rng(derive_seed(master, stream));
}

/// Uniform on [0,1) with 53 random bits; never returns 1.
[[nodiscard]] inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace optree
