#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace punch {

/// Incremental 64-bit FNV-1a. Used for cache keys and config hashes; not
/// a cryptographic digest.
class Fnv1a {
 public:
  void update(std::span<const std::byte> bytes) {
    for (std::byte b : bytes) {
      state_ ^= static_cast<std::uint64_t>(b);
      state_ *= 0x100000001B3ULL;
    }
  }
  void update(std::string_view s) { update(std::as_bytes(std::span(s.data(), s.size()))); }
  template <typename T>
  void update_value(const T& v) {
    update(std::as_bytes(std::span(&v, 1)));
  }
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xCBF29CE484222325ULL;
};

std::string to_hex(std::uint64_t v);

}  // namespace punch
