#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace urban {

// All randomness in the project flows from one experiment seed expanded into
// named substreams, so "data", "init", "batching" etc. stay independent and
// reruns are reproducible.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::mt19937_64 substream(uint64_t seed, std::string_view name, uint64_t index = 0) {
  uint64_t s = splitmix64(seed ^ fnv1a64(name));
  s = splitmix64(s ^ (0x632be59bd9b4e019ULL * (index + 1)));
  return std::mt19937_64(s);
}

}  // namespace urban
