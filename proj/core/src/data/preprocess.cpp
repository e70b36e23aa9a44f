#include "treecnn/data/preprocess.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "treecnn/common/error.hpp"

namespace treecnn {

namespace {

std::vector<float> scaled_pixels(const ImageRecord& r) {
  std::vector<float> out(r.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(r.pixels[i] / 255.0);
  return out;
}

std::vector<float> normalized(const ImageRecord& r, const PreprocessConfig& config) {
  auto x = scaled_pixels(r);
  if (config.gcn) global_contrast_normalize(x, config.gcn_epsilon);
  return x;
}

}  // namespace

void global_contrast_normalize(std::span<float> image, double epsilon) {
  if (image.empty()) return;
  double mean = 0.0;
  for (float v : image) mean += v;
  mean /= static_cast<double>(image.size());
  double sq = 0.0;
  for (float v : image) sq += (v - mean) * (v - mean);
  const double rms = std::sqrt(sq / static_cast<double>(image.size()));
  const double scale = 1.0 / std::max(rms, epsilon);
  for (auto& v : image) v = static_cast<float>((v - mean) * scale);
}

PreprocessStats fit_preprocess(const DatasetSplit& train, const PreprocessConfig& config) {
  if (train.tag != SplitTag::train) throw ConfigError("preprocess", "statistics must come from the training split");
  PreprocessStats stats;
  stats.dim = shape_size(train.image_shape);
  if (!config.zca) return stats;
  if (train.empty()) throw ConfigError("preprocess", "cannot fit whitening on an empty split");
  if (config.zca_regularization < 0) throw ConfigError("preprocess.zca_regularization", "must be >= 0");

  const std::size_t d = stats.dim;
  const std::size_t n = train.size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (const auto& r : train.records) {
    const auto x = normalized(r, config);
    for (std::size_t i = 0; i < d; ++i) mean[static_cast<Eigen::Index>(i)] += x[i];
  }
  mean /= static_cast<double>(n);

  // Accumulate the covariance in row chunks to bound memory.
  constexpr std::size_t kChunk = 512;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  Eigen::MatrixXd chunk(static_cast<Eigen::Index>(kChunk), static_cast<Eigen::Index>(d));
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t rows = std::min(kChunk, n - start);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto x = normalized(train.records[start + r], config);
      for (std::size_t i = 0; i < d; ++i)
        chunk(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = x[i] - mean[static_cast<Eigen::Index>(i)];
    }
    const auto block = chunk.topRows(static_cast<Eigen::Index>(rows));
    cov.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw Error("preprocess: eigendecomposition failed");
  Eigen::VectorXd scale = eig.eigenvalues().array().max(0.0);
  scale = (scale.array() + config.zca_regularization).rsqrt();
  if (!scale.allFinite()) throw ConfigError("preprocess.zca_regularization", "must be > 0 for rank-deficient data");
  const Eigen::MatrixXd w = eig.eigenvectors() * scale.asDiagonal() * eig.eigenvectors().transpose();

  stats.mean.assign(mean.data(), mean.data() + d);
  stats.whitening.resize(d * d);
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      stats.whitening.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) = w;
  return stats;
}

FeatureSet preprocess(const DatasetSplit& split, const PreprocessConfig& config, const PreprocessStats& stats) {
  const std::size_t d = shape_size(split.image_shape);
  if (d != stats.dim) throw ShapeError("preprocess", "image size does not match the fitted statistics");
  const bool zca = !stats.whitening.empty();
  FeatureSet out;
  out.sample_shape = split.image_shape;
  out.values.reserve(split.size() * d);
  out.labels.reserve(split.size());

  if (!zca) {
    for (const auto& r : split.records) out.append(normalized(r, config), r.label);
    return out;
  }

  using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto di = static_cast<Eigen::Index>(d);
  Eigen::Map<const MatR> w(stats.whitening.data(), di, di);
  constexpr std::size_t kChunk = 256;
  MatR chunk(static_cast<Eigen::Index>(kChunk), di);
  MatR white(static_cast<Eigen::Index>(kChunk), di);
  for (std::size_t start = 0; start < split.size(); start += kChunk) {
    const std::size_t rows = std::min(kChunk, split.size() - start);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto x = normalized(split.records[start + r], config);
      for (std::size_t i = 0; i < d; ++i) chunk(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = x[i] - stats.mean[i];
    }
    const auto rr = static_cast<Eigen::Index>(rows);
    // the whitening matrix is symmetric
    white.topRows(rr).noalias() = chunk.topRows(rr) * w;
    std::vector<float> y(d);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t i = 0; i < d; ++i) y[i] = static_cast<float>(white(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)));
      out.append(y, split.records[start + r].label);
    }
  }
  return out;
}

FeaturePair preprocess_pair(const DatasetPair& data, const PreprocessConfig& config) {
  const auto stats = fit_preprocess(data.train, config);
  return {preprocess(data.train, config, stats), preprocess(data.test, config, stats)};
}

}  // namespace treecnn
