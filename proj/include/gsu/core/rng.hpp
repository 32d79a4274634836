#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>

namespace gsu {

// same sequence as std::mt19937_64; boost's is markedly faster under its
// own distributions
using Engine = boost::random::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of substream `stream` under `seed`. Substreams let replicate and chunk
/// work run in any order (or on any thread) and still draw the same numbers.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream) {
  return Engine(derive_seed(seed, stream));
}

}  // namespace gsu
