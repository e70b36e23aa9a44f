#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "treecnn/common/types.hpp"
#include "treecnn/nn/tensor.hpp"

namespace treecnn {

enum class SplitTag { train, test };

std::string_view to_string(SplitTag tag);

// One raw image, channel-major bytes in [0, 255].
struct ImageRecord {
  std::vector<std::uint8_t> pixels;
  ClassLabel label = 0;
  std::uint8_t coarse_label = 0;  // CIFAR-100 only; kept for re-serialization

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct DatasetSplit {
  SplitTag tag = SplitTag::train;
  Shape image_shape;  // {C, H, W}
  std::size_t num_classes = 0;
  std::vector<ImageRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }

  // Record indices per class, in file order.
  std::map<ClassLabel, std::vector<std::size_t>> class_index() const;
  std::vector<std::size_t> class_counts() const;

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

struct DatasetPair {
  DatasetSplit train;
  DatasetSplit test;
};

DatasetSplit select_classes(const DatasetSplit& split, std::span<const ClassLabel> classes);

// 2x2 box-filter downsampling (rounded to nearest); odd trailing rows/columns
// are dropped.
DatasetSplit downsample_2x(const DatasetSplit& split);

}  // namespace treecnn
