#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

namespace treecnn {

// mt19937_64 is fully specified by the standard; the std:: distributions are
// not, so sampling goes through the helpers below to keep runs bit-identical
// across standard libraries.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seed for a named substream, e.g. derive_seed(base, "probe", stage).
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream,
                          std::uint64_t index = 0) noexcept;

// Uniform in [0, 1) with 53 random bits.
double uniform01(Rng& rng) noexcept;

// Uniform integer in [0, n). n must be > 0.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n) noexcept;

template <typename RandomIt>
void shuffle(RandomIt first, RandomIt last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace treecnn
