#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cavityrc {

/// FNV-1a 64-bit. Stable digest for config hashes and artifact checksums;
/// not cryptographic.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char *digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int k = 15; k >= 0; --k) {
    s[k] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

} // namespace cavityrc
