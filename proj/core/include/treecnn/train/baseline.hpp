#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "treecnn/train/effort.hpp"
#include "treecnn/train/incremental.hpp"

namespace treecnn {

// A single network over every class seen so far; output i is classes[i].
struct BaselineState {
  Network net;
  std::vector<ClassLabel> classes;
};

BaselineState make_baseline(const NetworkSpec& spec, std::span<const ClassLabel> classes, std::uint64_t seed);

AccuracyResult evaluate_accuracy(const BaselineState& state, const FeatureSet& test);

// Trains every layer on `train` (the baseline's first stage).
StageReport run_baseline_initial(BaselineState& state, const FeatureSet& train, const FeatureSet& test,
                                 const NodeTrainer& trainer);

// Appends one output per new class (old rows kept, new rows freshly
// initialized from `seed`), then retrains only the layers of `mode` on every
// sample of `train`.
StageReport run_baseline_stage(BaselineState& state, FineTuneMode mode, std::size_t stage,
                               std::span<const ClassLabel> new_classes, const FeatureSet& train,
                               const FeatureSet& test, const NodeTrainer& trainer, std::uint64_t seed);

}  // namespace treecnn
