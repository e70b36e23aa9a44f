#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "treecnn/data/dataset.hpp"
#include "treecnn/data/preprocess.hpp"
#include "treecnn/data/synthetic.hpp"
#include "treecnn/growth/growth.hpp"
#include "treecnn/nn/optimizer.hpp"
#include "treecnn/train/effort.hpp"
#include "treecnn/train/incremental.hpp"
#include "treecnn/tree/tree.hpp"

namespace treecnn::bench {

// kind: seven-segment (generated), cifar10 / cifar100 (binary batches in
// `path`), or idx (four IDX files).
struct DatasetConfig {
  std::string kind = "seven-segment";
  std::string path;
  std::string train_images, train_labels, test_images, test_labels;
  std::size_t num_classes = 10;
  SevenSegmentConfig synthetic;
  bool downsample = false;  // 2x2 mean pooling of every image

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct TreeConfig {
  std::string root = "desk-node";
  std::string branch = "desk-node";
  std::size_t shrink = 1;  // divides hidden widths of both node networks
  std::size_t max_children = 10;
  std::size_t max_depth = 2;

  friend bool operator==(const TreeConfig&, const TreeConfig&) = default;
};

// The fine-tuned single-network comparison. Modes listed in `train` are
// actually trained; efforts of all five modes are always computed.
struct BaselineConfig {
  std::string network = "desk-network-b";
  std::size_t shrink = 1;
  std::vector<FineTuneMode> train;

  friend bool operator==(const BaselineConfig&, const BaselineConfig&) = default;
};

struct RunConfig {
  std::string name = "run";
  std::uint64_t seed = 1;
  DatasetConfig dataset;
  PreprocessConfig preprocess;
  std::vector<std::vector<ClassLabel>> initial;  // groups under the root
  std::vector<std::vector<ClassLabel>> stages;   // new classes per stage
  TreeConfig tree;
  double alpha = 0.1;
  double beta = 0.1;
  ProbeSize probe;
  TrainingSchedule training;
  BaselineConfig baseline;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Parses a JSON run config. Class lists may use names or ids; "classes" may
// instead name a schedule file whose first group becomes the initial tree
// ("initial": "leaves" puts each class on its own leaf, "branch" puts them all
// under one branch). Relative schedule paths resolve against `base_dir`.
// Throws ConfigError naming the offending field.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical JSON with class ids; parse_run_config(to_text(c)) == c.
std::string to_text(const RunConfig& config);

void validate(const RunConfig& config);

const std::vector<std::string>& class_names(const DatasetConfig& dataset);

NodeArchitecture node_architecture(const RunConfig& config, const Shape& input);
NetworkSpec baseline_spec(const RunConfig& config, std::size_t classes, const Shape& input);
TreeLimits tree_limits(const RunConfig& config);
GrowthConfig growth_config(const RunConfig& config);
TrainingSchedule training_schedule(const RunConfig& config);

// Raw images for the configured dataset (downsampled when asked).
DatasetPair load_dataset(const DatasetConfig& dataset);

}  // namespace treecnn::bench
