#pragma once

#include <cstdint>
#include <random>

namespace bearline {

// SplitMix64 step; used to derive independent child seeds from a master seed
// by counter so trials and multi-start seeds never share a stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t counter) {
  return splitmix64(splitmix64(master ^ (0xa076'1d64'78bd'642fULL * (stream + 1))) + counter);
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t stream, std::uint64_t counter) {
  return std::mt19937_64(derive_seed(master, stream, counter));
}

// Fixed stream ids; keeps seed derivation collision-free across subsystems.
namespace rng_stream {
inline constexpr std::uint64_t kTrial = 1;
inline constexpr std::uint64_t kMultistart = 2;
inline constexpr std::uint64_t kStartPose = 3;
inline constexpr std::uint64_t kPriorDraw = 4;
inline constexpr std::uint64_t kMeasurement = 5;
}  // namespace rng_stream

}  // namespace bearline
