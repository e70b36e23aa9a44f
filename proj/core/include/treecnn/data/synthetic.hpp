#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "treecnn/data/dataset.hpp"

namespace treecnn {

// Procedural 28x28 grayscale digits drawn as seven-segment glyphs with random
// placement, size, slant, stroke width, contrast, spurious faint strokes and
// pixel noise. Ten classes, "0".."9".
struct SevenSegmentConfig {
  std::size_t train_per_class = 600;
  std::size_t test_per_class = 150;
  std::uint64_t seed = 1;
  double noise = 20.0;          // pixel noise standard deviation, in grey levels
  double spurious_rate = 0.25;  // chance of one extra faint segment

  friend bool operator==(const SevenSegmentConfig&, const SevenSegmentConfig&) = default;
};

DatasetPair make_seven_segment(const SevenSegmentConfig& config);

const std::vector<std::string>& seven_segment_class_names();

}  // namespace treecnn
