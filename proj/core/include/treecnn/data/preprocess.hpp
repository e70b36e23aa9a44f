#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "treecnn/data/dataset.hpp"
#include "treecnn/data/feature_set.hpp"

namespace treecnn {

// Pixels are first scaled to [0, 1]. Global contrast normalization then makes
// each image zero-mean with unit RMS (RMS floored at gcn_epsilon), and ZCA
// whitening decorrelates pixels using statistics of the training split.
struct PreprocessConfig {
  bool gcn = true;
  double gcn_epsilon = 1e-8;
  bool zca = true;
  double zca_regularization = 1e-2;

  friend bool operator==(const PreprocessConfig&, const PreprocessConfig&) = default;
};

// Fitted transform. `whitening` is row-major dim x dim, empty when ZCA is off.
struct PreprocessStats {
  std::size_t dim = 0;
  std::vector<double> mean;
  std::vector<double> whitening;
};

void global_contrast_normalize(std::span<float> image, double epsilon);

// Fits on `train` only; the split tag must be train.
PreprocessStats fit_preprocess(const DatasetSplit& train, const PreprocessConfig& config);

FeatureSet preprocess(const DatasetSplit& split, const PreprocessConfig& config, const PreprocessStats& stats);

// Fit on train, then transform both splits.
struct FeaturePair {
  FeatureSet train;
  FeatureSet test;
};
FeaturePair preprocess_pair(const DatasetPair& data, const PreprocessConfig& config);

}  // namespace treecnn
