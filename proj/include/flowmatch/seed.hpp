#pragma once

#include <cstdint>
#include <string_view>

namespace flowmatch {

/// 64-bit FNV-1a; stable across platforms and releases.
constexpr std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Sub-seed for a named role: seed XOR hash(role).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view role) {
  return seed ^ stable_hash(role);
}

}  // namespace flowmatch
