#pragma once

#include <cstdint>
#include <string_view>

namespace bdplan {

/// 64-bit FNV-1a; stable across platforms, used for config fingerprints.
constexpr uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace bdplan
