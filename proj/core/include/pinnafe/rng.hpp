#pragma once
#include <cmath>
#include <cstdint>
#include <string_view>

namespace pinnafe {

// Deterministic RNG used everywhere. splitmix64 keeps streams reproducible
// across platforms and standard-library versions (unlike the std
// distributions, whose output is implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Marsaglia polar method; deterministic given the stream.
  double normal() {
    for (;;) {
      double u = 2.0 * uniform01() - 1.0;
      double v = 2.0 * uniform01() - 1.0;
      double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

  uint64_t below(uint64_t n) { return next_u64() % n; }

 private:
  uint64_t state_;
};

// FNV-1a, used to derive independent substreams from one run seed plus a
// fixed label ("icnn", "collocation.interior", ...). Same seed + same label
// always yields the same stream; different labels decorrelate modules.
inline uint64_t hash_label(std::string_view label) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= uint64_t(uint8_t(c));
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline Rng substream(uint64_t seed, std::string_view label) {
  uint64_t mixed = seed ^ hash_label(label);
  // one splitmix step so adjacent seeds do not give adjacent states
  Rng warm(mixed);
  return Rng(warm.next_u64());
}

}  // namespace pinnafe
