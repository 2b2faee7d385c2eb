#pragma once

#include <cstdint>
#include <random>

namespace elabqud::util {

// Uniform draw in [0, n) by rejection. std::uniform_int_distribution is not
// specified bit-for-bit across standard libraries, so seeded runs use this.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

template <class Vec>
void shuffle(Vec& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace elabqud::util
