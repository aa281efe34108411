#pragma once

#include <cstdint>
#include <random>

namespace edgecache {

using Rng = std::mt19937_64;

// Independent named streams derived from one run seed. The environment and
// each agent draw from separate streams so that request realizations do not
// depend on how many random numbers a policy consumes.
enum class Stream : std::uint32_t { kEnvironment = 0, kAgent = 1, kTest = 7 };

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x9e3779b9u};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace edgecache
