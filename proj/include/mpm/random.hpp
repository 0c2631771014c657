#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mpm {

/// Identifier of the sampling scheme recorded in configs and reports. Bump the
/// suffix whenever the mapping from engine output to samples changes.
inline constexpr std::string_view kPrngName = "mt19937_64/u53-v1";

/// Reproducible uniform sampler.
///
/// `std::mt19937_64` has a standard-mandated output sequence, but the
/// `std::*_distribution` adaptors do not, so the real-valued mapping is done
/// here: the top 53 bits of each draw become a double in [0, 1).
class Sampler {
public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi]; returns lo exactly when lo == hi.
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  bool bernoulli(double p) { return unit() < p; }

private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer, used to derive independent stream seeds from one
/// experiment seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mpm
