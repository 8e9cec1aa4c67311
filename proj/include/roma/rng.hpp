#pragma once

#include <cstdint>
#include <random>

namespace roma {

// mt19937_64 output is fully specified by the standard; the mappings below
// avoid std::uniform_*_distribution, whose results vary across library
// implementations. Everything seeded through here is bit-reproducible.
inline double uniform_double(std::mt19937_64& g, double lo, double hi) {
  double u = static_cast<double>(g() >> 11) * 0x1.0p-53;  // [0,1)
  return lo + (hi - lo) * u;
}

inline uint64_t uniform_u64(std::mt19937_64& g, uint64_t bound) {
  // Modulo bias is irrelevant for test-data generation.
  return g() % bound;
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi_inclusive) {
  return lo + static_cast<int>(uniform_u64(g, static_cast<uint64_t>(hi_inclusive - lo + 1)));
}

}  // namespace roma
