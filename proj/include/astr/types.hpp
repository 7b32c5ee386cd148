#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace astr {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexSpan = std::span<const Index>;
using IndexList = std::vector<Index>;

// ceil(fraction * n) as a count, tolerant of products like 0.1 * 30 that land
// one ulp above an integer.
inline Index ceil_count(double value) {
  const double nearest = std::nearbyint(value);
  if (std::abs(value - nearest) <= 1e-9 * std::max(1.0, std::abs(value))) {
    return static_cast<Index>(nearest);
  }
  return static_cast<Index>(std::ceil(value));
}

inline IndexList iota_indices(Index n) {
  IndexList out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i;
  return out;
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace astr
