#pragma once

#include <cstdint>
#include <string_view>

namespace geofactor {

/// Deterministic pseudo-random stream.
///
/// Streams are derived from a (seed, purpose, index) triple so that the
/// simulator, each sampler chain, and the prediction stage never share a
/// stream: `RngStream(seed, "chain", 0)`, `RngStream(seed, "simulate")`,
/// `RngStream(seed, "predict")`. Derivation mixes the purpose string into
/// the seed with FNV-1a and expands state with splitmix64, so streams for
/// different purposes (or indices) are decorrelated by construction.
///
/// The generator itself is xoshiro256++; normal variates use Box-Muller on
/// explicit uniforms, which keeps output independent of the C++ standard
/// library implementation.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view purpose,
            std::uint64_t index = 0);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform();
  /// Standard normal draw.
  double normal();
  /// Gamma(shape, 1), shape > 0 (Marsaglia-Tsang).
  double gamma(double shape);
  /// Beta(a, b).
  double beta(double a, double b);

 private:
  std::uint64_t s_[4];
};

}  // namespace geofactor
