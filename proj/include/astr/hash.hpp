#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace astr::detail {

// FNV-1a, 64 bit.
class Fnv1a {
 public:
  template <class T>
  void add(const T& value) {
    add_bytes(reinterpret_cast<const unsigned char*>(&value), sizeof(T));
  }
  void add(std::string_view text) {
    add_bytes(reinterpret_cast<const unsigned char*>(text.data()), text.size());
  }
  void add_bytes(const unsigned char* p, std::size_t len) {
    for (std::size_t k = 0; k < len; ++k) {
      hash_ ^= p[k];
      hash_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace astr::detail
