#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace gaa {

// Incremental 64-bit FNV-1a. Used for content hashes that tie caches and
// checkpoints to their inputs; stable across platforms and runs.
class ContentHasher {
 public:
  ContentHasher& bytes(const void* data, std::size_t n);
  ContentHasher& str(std::string_view s);  // length-prefixed
  ContentHasher& u64(std::uint64_t v);
  ContentHasher& f64(double v);
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t v);

}  // namespace gaa
