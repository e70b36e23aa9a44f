#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "treecnn/data/feature_set.hpp"
#include "treecnn/growth/growth.hpp"
#include "treecnn/nn/optimizer.hpp"
#include "treecnn/train/report.hpp"
#include "treecnn/tree/tree.hpp"

namespace treecnn {

// Images per new class shown to a node before growth: a fixed count when
// per_class > 0, else a fraction of the smallest new class (at least one).
struct ProbeSize {
  std::size_t per_class = 0;
  double fraction = 0.1;

  friend bool operator==(const ProbeSize&, const ProbeSize&) = default;
};

void validate(const ProbeSize& probe);

struct StageConfig {
  std::size_t index = 1;
  std::vector<ClassLabel> new_classes;
  ProbeSize probe;
  GrowthConfig growth;  // alpha, beta and seed; capacity comes from the tree
  std::uint64_t seed = 0;
};

// What a node trainer is asked to do. `trainable` is null when every layer
// is updated.
struct TrainJob {
  NodeId node = kNoNode;
  std::size_t stage = 0;
  bool fresh = false;
  const std::vector<bool>* trainable = nullptr;
};

// Fits `net` on `data`, whose labels are already output indices of `net`.
using NodeTrainer = std::function<void(Network& net, const FeatureSet& data, const TrainJob& job)>;

// Minibatch SGD with `schedule`; the shuffle/dropout/flip stream of each job
// is derived from schedule.seed, the stage and the node.
NodeTrainer sgd_trainer(TrainingSchedule schedule);

// `count` images per class drawn without replacement, classes in the given
// order. Throws ConfigError when a class has fewer images.
FeatureSet draw_probe(const FeatureSet& data, std::span<const ClassLabel> classes, std::size_t count,
                      std::uint64_t seed);

std::size_t probe_count(const FeatureSet& data, std::span<const ClassLabel> classes, const ProbeSize& probe);

// Eval-mode outputs (logits) of `node` for a probe set holding the same number
// of images of each class in `classes`. Throws TreeError when the node's
// classifier has not been trained.
SampleOutputs probe_node(const Tree& tree, NodeId node, const FeatureSet& probe, std::span<const ClassLabel> classes);

// Samples of the classes routed through `node`, relabelled to child indices.
FeatureSet node_training_set(const Tree& tree, NodeId node, const FeatureSet& data);

// Top-1 accuracy. Throws ConfigError when the data holds a class the tree does
// not know.
AccuracyResult evaluate_accuracy(const Tree& tree, const FeatureSet& test);

TopologySummary summarize_topology(const Tree& tree);

// Trains every classifier of a freshly built tree on `train`.
StageReport run_initial_stage(Tree& tree, const FeatureSet& train, const FeatureSet& test,
                              const NodeTrainer& trainer);

// Probes the root with the new classes, grows the tree, then retrains the
// root and exactly the nodes whose label transforms changed. `train` and
// `test` hold every class learned so far, including the new ones.
StageReport run_incremental_stage(Tree& tree, const StageConfig& config, const FeatureSet& train,
                                  const FeatureSet& test, const NodeTrainer& trainer);

}  // namespace treecnn
