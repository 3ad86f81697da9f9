#pragma once

#include <cstdint>
#include <random>

namespace rfl {

// splitmix64; used to spread a master seed over independent streams.
inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  uint64_t a = splitmix64(s);
  return splitmix64(s) ^ a;
}

// Uniform mappings from raw 64-bit draws. std::uniform_real_distribution is
// implementation-defined, so frozen test values go through these instead.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

inline int uniform_int(std::mt19937_64& g, int n) {  // in [0, n)
  return static_cast<int>(g() % static_cast<uint64_t>(n));
}

}  // namespace rfl
