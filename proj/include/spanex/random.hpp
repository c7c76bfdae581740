#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace spanex {

// All randomness in the library flows from a single root seed that is split
// into independent streams per purpose (parameter init, negative sampling,
// epoch shuffling). Streams are derived with splitmix64 so that runs are
// reproducible bit-for-bit given the same seed, and so that per-sentence
// sampling streams can be derived independently of processing order.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose) {
  return splitmix64(root ^ fnv1a64(purpose));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose,
                                 std::uint64_t index) {
  return splitmix64(derive_seed(root, purpose) ^ splitmix64(index));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64{seed};
}

// Unbiased integer in [0, n). Hand-rolled (rejection sampling) because the
// standard distributions are implementation-defined and would break
// cross-toolchain determinism of sampled negatives.
inline std::size_t uniform_below(std::mt19937_64& rng, std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<std::size_t>(v % n);
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  // 53-bit mantissa draw in [0,1).
  const double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
  return lo + u * (hi - lo);
}

template <typename T>
void shuffle_inplace(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = uniform_below(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

// k distinct indices drawn uniformly from [0, pool_size), via partial
// Fisher-Yates. Returns all indices (shuffled) when k >= pool_size.
inline std::vector<std::size_t> sample_without_replacement(std::size_t pool_size,
                                                           std::size_t k,
                                                           std::mt19937_64& rng) {
  std::vector<std::size_t> pool(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) pool[i] = i;
  const std::size_t take = k < pool_size ? k : pool_size;
  for (std::size_t i = 0; i < take; ++i) {
    std::size_t j = i + uniform_below(rng, pool_size - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

}  // namespace spanex
