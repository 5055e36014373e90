#pragma once

#include <cstdint>
#include <random>

namespace elr {

// All randomness in the project derives from one root seed, split into
// independent substreams so that e.g. label noise can be re-randomized
// while the inputs stay fixed.
enum class Stream : std::uint64_t {
  Means = 1,
  Inputs = 2,
  Noise = 3,
  Init = 4,
  InitSecond = 5,  // second network of a two-network run
  Shuffle = 6,
  Mixup = 7,
  MixupSecond = 8,
};

// splitmix64 finalizer; decorrelates nearby seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t root, Stream stream) {
  return mix64(mix64(root) ^ static_cast<std::uint64_t>(stream));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root, Stream stream) {
  return Rng(substream_seed(root, stream));
}

}  // namespace elr
