#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace nestag {

// Seeded randomness helpers. mt19937_64 has a fully specified output
// sequence, and the bounded draw below avoids std::uniform_int_distribution,
// whose results vary between standard library implementations. Training,
// splitting and synthesis all go through these so a seed means the same
// bytes everywhere.

inline uint64_t rand_below(std::mt19937_64& g, uint64_t n) {
  // rejection sampling keeps the draw unbiased
  uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return x % n;
}

// uniform double in [0, 1)
inline double rand_unit(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

template <class T>
void shuffle_vec(std::vector<T>& v, std::mt19937_64& g) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rand_below(g, i));
    std::swap(v[i - 1], v[j]);
  }
}

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 1469598103934665603ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 1469598103934665603ull) {
  return fnv1a64(s.data(), s.size(), h);
}

}  // namespace nestag
