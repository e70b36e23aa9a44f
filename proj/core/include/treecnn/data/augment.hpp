#pragma once

#include "treecnn/common/random.hpp"
#include "treecnn/nn/tensor.hpp"

namespace treecnn {

// Mirrors each [C, H, W] sample of a [B, C, H, W] batch left-right with
// probability `p`. Draws exactly one uniform per sample.
void augment_flip(Tensor& batch, double p, Rng& rng);

// Left-right mirror of one [C, H, W] sample in place.
void flip_horizontal(std::span<float> sample, std::size_t channels, std::size_t height,
                     std::size_t width);

}  // namespace treecnn
