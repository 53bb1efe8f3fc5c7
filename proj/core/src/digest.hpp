#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace trendlens::detail {

// FNV-1a 64-bit, hex-encoded. Used for config digests in reports, where a
// stable fingerprint matters but cryptographic strength does not.
inline std::string fnv1a64_hex(std::string_view data) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace trendlens::detail
