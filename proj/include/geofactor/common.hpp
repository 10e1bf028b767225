#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace geofactor {

inline constexpr const char* kVersion = "0.1.0";

/// Input or configuration problem; the CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure (factorization breakdown, degenerate chain); exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// FNV-1a, used for content hashes in manifests and determinism checks.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t h = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(const std::string& s, std::uint64_t h);
std::string hash_hex(std::uint64_t h);

}  // namespace geofactor
