#include "treecnn/data/feature_set.hpp"

#include <algorithm>
#include <unordered_set>

namespace treecnn {

FeatureSet select_indices(const FeatureSet& set, std::span<const std::size_t> indices) {
  FeatureSet out;
  out.sample_shape = set.sample_shape;
  out.values.reserve(indices.size() * set.sample_size());
  out.labels.reserve(indices.size());
  for (auto i : indices) out.append(set.sample(i), set.labels.at(i));
  return out;
}

FeatureSet select_classes(const FeatureSet& set, std::span<const ClassLabel> classes) {
  const std::unordered_set<ClassLabel> wanted(classes.begin(), classes.end());
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < set.size(); ++i)
    if (wanted.contains(set.labels[i])) idx.push_back(i);
  return select_indices(set, idx);
}

Tensor make_batch(const FeatureSet& set, std::span<const std::size_t> indices) {
  Shape shape{indices.size()};
  shape.insert(shape.end(), set.sample_shape.begin(), set.sample_shape.end());
  Tensor batch(shape);
  const std::size_t n = set.sample_size();
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto src = set.sample(indices[b]);
    std::copy(src.begin(), src.end(), batch.data() + b * n);
  }
  return batch;
}

std::vector<std::size_t> indices_of_class(const FeatureSet& set, ClassLabel label) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < set.size(); ++i)
    if (set.labels[i] == label) idx.push_back(i);
  return idx;
}

}  // namespace treecnn
