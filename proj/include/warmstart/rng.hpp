#pragma once

#include <cstdint>
#include <random>

namespace warmstart {

// splitmix64 finalizer; used to derive independent named sub-streams from a
// master seed so that resume and parallel episode execution stay reproducible.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t a) { return mix64(master ^ mix64(a)); }
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b) {
  return mix64(derive_seed(master, a) ^ mix64(b + 0x5851f42d4c957f2dULL));
}
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b, uint64_t c) {
  return mix64(derive_seed(master, a, b) ^ mix64(c + 0x14057b7ef767814fULL));
}

using Rng = std::mt19937_64;

// Uniform integer in [0, n). Hand-rolled so results do not depend on the
// standard library's distribution implementation.
inline int uniform_index(Rng& rng, int n) {
  uint64_t bound = static_cast<uint64_t>(n);
  uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return static_cast<int>(r % bound);
}

inline double uniform_real(Rng& rng) {
  return (rng() >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
}

}  // namespace warmstart
