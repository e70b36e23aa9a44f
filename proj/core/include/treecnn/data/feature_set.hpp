#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "treecnn/common/types.hpp"
#include "treecnn/nn/tensor.hpp"

namespace treecnn {

// Preprocessed samples ready for a network: one row of `sample_size()` floats
// per labelled sample.
struct FeatureSet {
  Shape sample_shape;
  std::vector<float> values;
  std::vector<ClassLabel> labels;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }
  std::size_t sample_size() const noexcept { return shape_size(sample_shape); }

  std::span<const float> sample(std::size_t i) const {
    return {values.data() + i * sample_size(), sample_size()};
  }
  std::span<float> sample(std::size_t i) { return {values.data() + i * sample_size(), sample_size()}; }

  void append(std::span<const float> sample, ClassLabel label) {
    values.insert(values.end(), sample.begin(), sample.end());
    labels.push_back(label);
  }
};

FeatureSet select_indices(const FeatureSet& set, std::span<const std::size_t> indices);
FeatureSet select_classes(const FeatureSet& set, std::span<const ClassLabel> classes);

// Stacks the chosen samples into a [B, sample_shape...] batch.
Tensor make_batch(const FeatureSet& set, std::span<const std::size_t> indices);

// Indices of each class, in dataset order.
std::vector<std::size_t> indices_of_class(const FeatureSet& set, ClassLabel label);

}  // namespace treecnn
