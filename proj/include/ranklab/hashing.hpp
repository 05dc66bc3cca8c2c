#pragma once

#include <cstdint>
#include <string_view>

namespace ranklab::hashing {

// FNV-1a, 64 bit. The constants are part of the on-disk contract: feature
// bucket ids, derived sampling seeds, and manifest checksums all come from
// this hash, so any reimplementation must reproduce it bit for bit.
inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a(std::string_view bytes,
                              std::uint64_t state = kFnvOffset) {
  for (unsigned char c : bytes) {
    state ^= static_cast<std::uint64_t>(c);
    state *= kFnvPrime;
  }
  return state;
}

// Feeds the eight bytes of `value` in little-endian order.
constexpr std::uint64_t fnv1a_u64(std::uint64_t value,
                                  std::uint64_t state = kFnvOffset) {
  for (int i = 0; i < 8; ++i) {
    state ^= (value >> (8 * i)) & 0xffULL;
    state *= kFnvPrime;
  }
  return state;
}

// Seeded string hash: the seed is folded into the state before the payload.
inline std::uint64_t seeded_hash(std::string_view s, std::uint64_t seed) {
  return fnv1a(s, fnv1a_u64(seed));
}

}  // namespace ranklab::hashing
