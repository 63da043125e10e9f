#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

#include <boost/random/mersenne_twister.hpp>

namespace gmsm {

// All randomness goes through mt19937_64 engines seeded from SplitMix64
// mixes of a root seed and a stream key. Distributions come from
// Boost.Random, whose algorithms are fixed across platforms.
using Engine = boost::random::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) noexcept {
  return splitmix64(seed ^ splitmix64(key + 0x632be59bd9b4e019ULL));
}

// FNV-1a; used for stream names and config hashes.
constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t hash_doubles(std::uint64_t h, std::span<const double> values) noexcept {
  for (double v : values) {
    std::uint64_t bits = 0;
    if (v == 0.0) v = 0.0;  // fold -0.0 onto +0.0
    std::memcpy(&bits, &v, sizeof bits);
    h = mix_seed(h, bits);
  }
  return h;
}

// Seed for the named stream `column`, chunk `chunk`, derived from `root`.
// Adding a stream never perturbs the others.
inline std::uint64_t stream_seed(std::uint64_t root, std::string_view column,
                                 std::uint64_t chunk = 0) noexcept {
  return mix_seed(mix_seed(root, fnv1a(column)), chunk);
}

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

}  // namespace gmsm
