#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "treecnn/bench/config.hpp"
#include "treecnn/bench/run_dir.hpp"
#include "treecnn/train/incremental.hpp"

namespace treecnn::bench {

struct RunOptions {
  std::ostream* log = nullptr;
  // Replaces SGD for every node and baseline network (tests use stubs).
  std::optional<NodeTrainer> trainer;
  // Stop once this many tree stages are complete, as if interrupted.
  std::optional<std::size_t> stop_after;
};

struct RunResult {
  std::size_t stages_run = 0;      // executed by this call
  std::size_t stages_resumed = 0;  // found complete on disk
  std::vector<StageReport> reports;
};

// Executes (or resumes) a run: initial tree, every scheduled stage, then the
// requested baseline modes. A directory holding a different config is
// refused with ConfigError.
RunResult run_experiment(const RunConfig& config, const std::filesystem::path& dir, const RunOptions& options = {});

// Dataset, preprocessing and class bookkeeping shared by run and verify.
struct PreparedData {
  FeatureSet train;
  FeatureSet test;
  Shape image_shape;
};

PreparedData prepare_data(const RunConfig& config);

// Classes known after `stage` (0 is the initial tree).
std::vector<ClassLabel> classes_through(const RunConfig& config, std::size_t stage);

}  // namespace treecnn::bench
