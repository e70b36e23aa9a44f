#include "treecnn/data/augment.hpp"

#include <algorithm>

#include "treecnn/common/error.hpp"

namespace treecnn {

void flip_horizontal(std::span<float> sample, std::size_t channels, std::size_t height,
                     std::size_t width) {
  for (std::size_t row = 0; row < channels * height; ++row) {
    auto* p = sample.data() + row * width;
    std::reverse(p, p + width);
  }
}

void augment_flip(Tensor& batch, double p, Rng& rng) {
  if (batch.shape().size() != 4) throw ShapeError("flip", "expected [B, C, H, W], got " + shape_string(batch.shape()));
  const auto& s = batch.shape();
  const std::size_t per = s[1] * s[2] * s[3];
  for (std::size_t b = 0; b < s[0]; ++b) {
    if (uniform01(rng) < p) flip_horizontal(batch.values().subspan(b * per, per), s[1], s[2], s[3]);
  }
}

}  // namespace treecnn
