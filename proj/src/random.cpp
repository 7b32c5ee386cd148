#include "astr/random.hpp"

#include "astr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace astr {

Index Rng::uniform_index(Index n) {
  if (n < 1) throw ContractError("uniform_index: n must be >= 1");
  const auto range = static_cast<std::uint64_t>(n);
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t u = engine_();
  while (u >= limit) u = engine_();
  return static_cast<Index>(u % range);
}

double Rng::normal() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

SubsetSampler::SubsetSampler(Index n) : perm_(iota_indices(n)) {}

IndexList SubsetSampler::draw(Index k, Rng& rng) {
  const Index n = population();
  if (k < 1 || k > n) throw ContractError("SubsetSampler::draw: need 1 <= k <= n");
  if (k == n) return iota_indices(n);
  for (Index i = 0; i < k; ++i) {
    const Index j = i + rng.uniform_index(n - i);
    std::swap(perm_[static_cast<std::size_t>(i)], perm_[static_cast<std::size_t>(j)]);
  }
  IndexList out(perm_.begin(), perm_.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

IndexList sample_subset(IndexSpan from, Index k, Rng& rng) {
  const auto n = static_cast<Index>(from.size());
  if (k < 1 || k > n) throw ContractError("sample_subset: need 1 <= k <= |from|");
  IndexList pool(from.begin(), from.end());
  if (k < n) {
    for (Index i = 0; i < k; ++i) {
      const Index j = i + rng.uniform_index(n - i);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
  }
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace astr
