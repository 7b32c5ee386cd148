#pragma once

#include "astr/types.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace astr::detail {

inline constexpr Index kMinBlockSize = 1024;

// Number of contiguous blocks a sample of size m is cut into. Depends only
// on (m, threads), so results are bit-identical at a fixed thread count.
inline int block_count(Index m, int threads) {
  if (threads <= 1) return 1;
  return static_cast<int>(std::clamp<Index>(m / kMinBlockSize, 1, threads));
}

// Sum of fn(block) over a fixed contiguous partition of `sample`, combined in
// block order.
template <class T, class Fn>
T reduce_blocks(IndexSpan sample, int threads, Fn&& fn) {
  const int blocks = block_count(static_cast<Index>(sample.size()), threads);
  if (blocks == 1) return fn(sample);
  const std::size_t m = sample.size();
  auto block = [&](int b) {
    const std::size_t lo = m * static_cast<std::size_t>(b) / static_cast<std::size_t>(blocks);
    const std::size_t hi = m * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(blocks);
    return sample.subspan(lo, hi - lo);
  };
  std::vector<T> partial(static_cast<std::size_t>(blocks));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(blocks));
  {
    std::vector<std::jthread> workers;
    workers.reserve(static_cast<std::size_t>(blocks - 1));
    for (int b = 1; b < blocks; ++b) {
      workers.emplace_back([&, b] {
        try {
          partial[static_cast<std::size_t>(b)] = fn(block(b));
        } catch (...) {
          errors[static_cast<std::size_t>(b)] = std::current_exception();
        }
      });
    }
    try {
      partial[0] = fn(block(0));
    } catch (...) {
      errors[0] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  T total = std::move(partial[0]);
  for (std::size_t b = 1; b < partial.size(); ++b) total += partial[b];
  return total;
}

}  // namespace astr::detail
