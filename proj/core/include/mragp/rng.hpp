#pragma once

#include <cstdint>
#include <random>

namespace mragp {

// splitmix64; used to decorrelate (seed, stream) pairs before seeding the
// per-unit mt19937_64 engines. Streams are reproducible regardless of the
// number of threads or the order units are processed in.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent substream for work unit `index` under a global `seed`.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(splitmix64(s)),
                    static_cast<std::uint32_t>(splitmix64(s) >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace mragp
