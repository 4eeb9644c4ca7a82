#pragma once

#include <cstdint>

namespace ddr {

// Counter-based generator: every draw is a pure hash of (seed, stream
// coordinates), so independent rays and iterations can be evaluated in any
// order, or concurrently, and still reproduce bit-for-bit. Streams are frozen
// by key alone, which is also what lets finite-difference checks perturb
// parameters under common random numbers.
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed) : seed_(seed) {}

  // Distinct `purpose` values keep consumers (jitter, gumbel, triangle draws,
  // batch selection) on non-overlapping streams.
  double uniform(uint64_t purpose, uint64_t a, uint64_t b, uint64_t c) const {
    uint64_t h = mix(seed_ ^ mix(purpose));
    h = mix(h ^ mix(a));
    h = mix(h ^ mix(b));
    h = mix(h ^ mix(c));
    // 53-bit mantissa, result in (0,1) exclusive at both ends.
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    return u == 0.0 ? 0x1.0p-53 : u;
  }

  uint64_t integer(uint64_t purpose, uint64_t a, uint64_t b, uint64_t bound) const {
    uint64_t h = mix(seed_ ^ mix(purpose));
    h = mix(h ^ mix(a));
    h = mix(h ^ mix(b));
    return h % bound;
  }

  uint64_t seed() const { return seed_; }

 private:
  // splitmix64 finalizer.
  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t seed_;
};

// Stream purposes used across the library.
namespace rng_stream {
constexpr uint64_t kStratifiedJitter = 1;
constexpr uint64_t kGumbel = 2;
constexpr uint64_t kTriangle = 3;
constexpr uint64_t kBatchSelect = 4;
constexpr uint64_t kInit = 5;
constexpr uint64_t kTest = 100;
}  // namespace rng_stream

}  // namespace ddr
