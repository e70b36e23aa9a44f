#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace treecnn {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

// FNV-1a, 64 bit. Chainable through `seed`.
std::uint64_t fnv1a(std::span<const std::byte> bytes,
                    std::uint64_t seed = kFnvOffset) noexcept;
std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = kFnvOffset) noexcept;

}  // namespace treecnn
