#pragma once

#include <cstdint>
#include <random>

namespace dpfed {

using Engine = std::mt19937_64;

/// Purpose of a derived random stream. Each purpose gets its own key space
/// so that, for example, batch sampling never shares draws with noise.
enum class StreamTag : std::uint64_t {
  kInit = 1,
  kPartition = 2,
  kBatch = 3,
  kNoise = 4,
  kSynthetic = 5,
};

/// Mixes (master, tag, a, b) into a 64-bit seed with SplitMix64 rounds.
/// Distinct keys give statistically independent streams.
std::uint64_t derive_seed(std::uint64_t master, StreamTag tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

inline Engine make_stream(std::uint64_t master, StreamTag tag,
                          std::uint64_t a = 0, std::uint64_t b = 0) {
  return Engine(derive_seed(master, tag, a, b));
}

}  // namespace dpfed
