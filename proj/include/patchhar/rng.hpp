#pragma once

#include <cstdint>
#include <random>

namespace patchhar {

// SplitMix64 finalizer. Used to spread low-entropy seeds (epoch counters,
// window indices) over the full 64-bit space before feeding an engine.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix2(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (splitmix64(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// Derives a substream seed from a master seed plus any number of stream tags
// (stage id, epoch, batch, window index...). Order-sensitive by construction:
// mix_seed(s, a, b) != mix_seed(s, b, a) in general.
template <typename... Rest>
inline std::uint64_t mix_seed(std::uint64_t first, Rest... rest) {
  std::uint64_t h = splitmix64(first);
  ((h = mix2(h, static_cast<std::uint64_t>(rest))), ...);
  return h;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace patchhar
