#pragma once

// Counter-based seed derivation: every random stream in the toolkit is keyed
// by (seed, purpose tag, index), so work can be split across threads without
// changing any drawn value.

#include <cstdint>
#include <random>
#include <string_view>

namespace nfas {

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t tag_hash(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                                  std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ tag_hash(tag)) + index);
}

[[nodiscard]] inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view tag,
                                                 std::uint64_t index = 0) {
  return std::mt19937_64(derive_seed(seed, tag, index));
}

}  // namespace nfas
