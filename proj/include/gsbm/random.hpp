#pragma once

#include <cstdint>
#include <random>

namespace gsbm {

using Rng = std::mt19937_64;

/// Independent random streams derived from one root seed.
enum class Stream : std::uint64_t {
  attributes = 1,
  edges = 2,
  labels = 3,
  weighing = 4,
  eigensolver = 5,
  epsilon = 6,
  pairs = 7,
  tree = 8,
  coupling = 9,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag) {
  return splitmix64(splitmix64(root) ^ splitmix64(tag * 0xd1342543de82ef95ULL + 1));
}

inline std::uint64_t derive_seed(std::uint64_t root, Stream stream) {
  return derive_seed(root, static_cast<std::uint64_t>(stream));
}

inline Rng make_rng(std::uint64_t root, Stream stream) {
  return Rng(derive_seed(root, stream));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace gsbm
