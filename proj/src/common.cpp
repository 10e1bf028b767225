#include "geofactor/common.hpp"

#include <array>
#include <cstdio>

namespace geofactor {

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& s, std::uint64_t h) {
  return fnv1a64(s.data(), s.size(), h);
}

std::string hash_hex(std::uint64_t h) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf.data());
}

}  // namespace geofactor
