#pragma once

// Counter-based stream derivation. Every randomized routine owns a stream
// keyed by (master seed, purpose tag, indices...), so results are identical
// for any worker count and any evaluation order. Streams never split: one
// stream is consumed sequentially by exactly one logical work item.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hlmt::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Purpose tags keep unrelated streams disjoint even for equal index paths.
inline constexpr std::uint64_t kTagBootOne = 0x01;
inline constexpr std::uint64_t kTagBootTwo = 0x02;
inline constexpr std::uint64_t kTagCoordinate = 0x03;
inline constexpr std::uint64_t kTagGlobal = 0x04;
inline constexpr std::uint64_t kTagDatasetX = 0x05;
inline constexpr std::uint64_t kTagDatasetY = 0x06;
inline constexpr std::uint64_t kTagMeanBoot = 0x07;
inline constexpr std::uint64_t kTagPermutation = 0x08;
inline constexpr std::uint64_t kTagAre = 0x09;
inline constexpr std::uint64_t kTagReplication = 0x0A;

// splitmix64 finalizer (Stafford mix13).
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t derive(std::uint64_t key, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(key + kGolden);
  for (std::uint64_t w : path) h = mix64(h ^ (w + kGolden));
  return h;
}

// splitmix64: a Weyl counter pushed through the mix64 finalizer. Cheap to
// construct (one word of state), portable, and strong enough for Monte Carlo.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

  result_type operator()() { return mix64(state_ += kGolden); }

 private:
  std::uint64_t state_;
};

inline Stream make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Stream(derive(master, path));
}

}  // namespace hlmt::rng
