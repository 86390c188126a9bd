#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace mdk {

// All randomness in the project flows from one root seed expanded through the
// counter scheme below. A stream is addressed by (root, tag, i0, i1); the same
// address always yields the same stream, independent of call order. This is
// what makes scene generation parallelizable and checkpoint resume exact.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                 std::uint64_t i0 = 0, std::uint64_t i1 = 0) {
  std::uint64_t x = splitmix64(root ^ fnv1a64(tag));
  x = splitmix64(x ^ splitmix64(i0));
  x = splitmix64(x ^ splitmix64(i1));
  return x;
}

// mt19937_64 engine with explicit, implementation-independent transforms.
// The standard pins the engine's output sequence; the std:: distributions are
// implementation-defined, so the few transforms we need are spelled out here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1): 53 significant bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller (cosine branch only).
  double normal() {
    const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  // Uniform integer in [0, n). Modulo bias is irrelevant at desk scale.
  std::uint64_t bounded(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

// Deterministic Fisher-Yates; avoids std::shuffle's unspecified draw pattern.
template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace mdk
