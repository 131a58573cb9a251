#pragma once

#include <cstdint>
#include <string_view>

namespace leakbench {

// Counter-based generator "ctr-splitmix64-v1": every draw is a pure function
// of (seed, k0, k1, k2), so streams keyed by (asset, day, field) are stable
// under any iteration order or worker count.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t raw(std::uint64_t k0, std::uint64_t k1 = 0,
                    std::uint64_t k2 = 0) const;

  // Uniform on [0, 1).
  double uniform(std::uint64_t k0, std::uint64_t k1 = 0,
                 std::uint64_t k2 = 0) const;

  // Standard normal via inverse CDF on the uniform draw.
  double normal(std::uint64_t k0, std::uint64_t k1 = 0,
                std::uint64_t k2 = 0) const;

  std::uint64_t seed() const { return seed_; }

  static constexpr const char* kName = "ctr-splitmix64-v1";

 private:
  std::uint64_t seed_;
};

// Inverse standard-normal CDF (Acklam's rational approximation with one
// Halley refinement; |relative error| well below 1e-12 over (0, 1)).
double inverse_normal_cdf(double p);

// FNV-1a 64-bit; used for config fingerprints and per-cell seed derivation.
std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace leakbench
