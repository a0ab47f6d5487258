#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

namespace msmi {

/// Uniform draw in [0, n) by rejection sampling. Unlike
/// std::uniform_int_distribution the output stream is fixed by the standard's
/// mt19937_64 sequence alone, so results are identical across toolchains.
inline std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) {
    x = rng();
  }
  return x % n;
}

/// Fisher-Yates permutation of 0..n-1 driven by bounded_uniform.
inline std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(bounded_uniform(rng, i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from the single run seed, so that
/// splits, training shuffles and mocks never share draws.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = base;
  for (char c : tag) {
    h = splitmix64(h ^ static_cast<std::uint8_t>(c));
  }
  return h;
}

}  // namespace msmi
