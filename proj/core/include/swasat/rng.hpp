#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace swasat::rng {

// Deterministic sampling helpers. Everything here is specified down to the
// bit so that sample selection is identical across standard libraries.

/// SplitMix64 step; also used to derive independent seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derive a child seed from a parent seed and a label (FNV-1a over the label).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Small deterministic generator (SplitMix64 stream).
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t uniform_index(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

 private:
  std::uint64_t state_;
};

/// Fisher-Yates permutation of [0, n).
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed);

/// k distinct indices from [0, n), in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                    std::uint64_t seed);

}  // namespace swasat::rng
