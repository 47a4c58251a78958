// Deterministic seed derivation. Every randomized component seeds its RNG
// from a (base seed, string labels...) mix so replays reproduce streams
// bit-exactly regardless of call interleaving.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace poseattack {

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::string_view> labels) {
  std::uint64_t h = splitmix64(base);
  for (std::string_view s : labels) h = splitmix64(h ^ fnv1a64(s));
  return h;
}

}  // namespace poseattack
