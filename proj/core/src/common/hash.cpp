#include "treecnn/common/hash.hpp"

namespace treecnn {

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed) noexcept {
  std::uint64_t h = seed;
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) noexcept {
  return fnv1a(std::as_bytes(std::span(text.data(), text.size())), seed);
}

}  // namespace treecnn
