#pragma once

#include "astr/types.hpp"

#include <cstdint>
#include <optional>
#include <random>

namespace astr {

// Seeded generator with distribution code written out here so that streams
// are identical across standard-library implementations (the std::
// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on {0, ..., n-1}; n >= 1.
  Index uniform_index(Index n);

  // Standard normal (Box-Muller).
  double normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

// Uniform k-subsets of {0, ..., n-1} without replacement, via a partial
// Fisher-Yates shuffle of a persistent permutation. Returned indices are
// sorted so that summation order depends only on the subset.
class SubsetSampler {
 public:
  explicit SubsetSampler(Index n);

  Index population() const { return static_cast<Index>(perm_.size()); }
  IndexList draw(Index k, Rng& rng);

 private:
  IndexList perm_;
};

// Uniform k-subset of `from` (sorted ascending in the result).
IndexList sample_subset(IndexSpan from, Index k, Rng& rng);

}  // namespace astr
