#pragma once

#include <cstdint>
#include <random>

namespace semnet {

// Named sub-streams of one master seed. Each consumer draws from its own
// stream so that changing, say, the number of users leaves base-station
// placement and knowledge assignment untouched.
enum class Stream : std::uint32_t {
  kBsPlacement = 1,
  kMuPlacement = 2,
  kBsKnowledge = 3,
  kMuKnowledge = 4,
  kEta = 5,
  kChanceCheck = 6,
  kValidate = 7,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x5e3a17u};
  return std::mt19937_64(seq);
}

// Uniform double in [0, 1) from the top 53 bits; unlike
// std::uniform_real_distribution this is identical across standard libraries.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace semnet
