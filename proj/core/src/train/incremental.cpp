#include "treecnn/train/incremental.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "treecnn/common/error.hpp"
#include "treecnn/common/random.hpp"
#include "treecnn/growth/apply.hpp"
#include "treecnn/train/effort.hpp"

namespace treecnn {

namespace {

constexpr std::size_t kEvalChunk = 256;

bool can_nest(const Tree& tree, NodeId id) {
  const auto max_depth = tree.limits().max_depth;
  return max_depth == 0 || tree.depth(id) + 2 <= max_depth;
}

void apply_one(Tree& tree, NodeId node, const Placement& action) {
  PlacementPlan single;
  single.node = node;
  single.actions.push_back(action);
  apply_plan(tree, single);
}

struct StageRun {
  Tree& tree;
  const StageConfig& config;
  const FeatureSet& train;
  std::size_t probe_images;
  StageReport& report;

  // Places `labels` below `node`. A class sent to an existing, trained branch
  // whose children may still deepen is placed by growing that branch in turn.
  void grow_at(NodeId node, const std::vector<ClassLabel>& labels, bool is_root) {
    const auto probe = draw_probe(train, labels, probe_images, derive_seed(config.seed, "probe", node));
    GrowthInput in;
    in.node = node;
    in.is_root = is_root;
    in.children = summarize_children(tree, node);
    in.new_classes = labels;
    in.averaged = average_outputs(probe_node(tree, node, probe, labels));
    const auto plan = grow(in, growth_config_for(tree, config.growth));
    report.plans.push_back(plan);

    std::vector<std::pair<NodeId, std::vector<ClassLabel>>> deferred;
    for (const auto& a : plan.actions) {
      const bool nest = a.kind == PlacementKind::add_to_child && !tree.node(a.target).is_leaf() &&
                        tree.node(a.target).trained && can_nest(tree, a.target);
      if (!nest) {
        apply_one(tree, node, a);
        continue;
      }
      auto it = std::find_if(deferred.begin(), deferred.end(), [&](const auto& d) { return d.first == a.target; });
      if (it == deferred.end()) it = deferred.insert(deferred.end(), {a.target, {}});
      it->second.push_back(a.label);
    }
    for (const auto& [target, classes] : deferred) grow_at(target, classes, false);
  }
};

void retrain(Tree& tree, const std::vector<NodeId>& ids, const FeatureSet& train, const NodeTrainer& trainer,
             StageReport& report) {
  std::vector<EffortTerm> terms;
  for (auto id : ids) {
    auto& n = tree.node(id);
    const auto data = node_training_set(tree, id, train);
    const TrainJob job{id, report.stage, !n.trained, nullptr};
    trainer(*n.classifier, data, job);
    n.trained = true;
    const auto weights = count_weights(n.classifier->spec());
    report.retrained.push_back({id, id == tree.root() ? "root" : "branch", job.fresh, n.classifier->outputs(), weights,
                                static_cast<std::uint64_t>(data.size())});
    terms.push_back({weights, static_cast<std::uint64_t>(data.size())});
  }
  report.effort = training_effort(terms);
}

void finish(const Tree& tree, const FeatureSet& test, StageReport& report) {
  report.classes = tree.classes();
  report.accuracy = evaluate_accuracy(tree, test);
  report.topology = summarize_topology(tree);
}

}  // namespace

void validate(const ProbeSize& p) {
  if (p.per_class == 0 && !(p.fraction > 0 && p.fraction <= 1))
    throw ConfigError("probe.fraction", "must be in (0, 1]");
}

NodeTrainer sgd_trainer(TrainingSchedule schedule) {
  validate(schedule);
  return [schedule](Network& net, const FeatureSet& data, const TrainJob& job) {
    auto s = schedule;
    s.seed = derive_seed(schedule.seed, "train", (static_cast<std::uint64_t>(job.stage) << 32) | job.node);
    train_network(net, data, s, job.trainable);
  };
}

FeatureSet draw_probe(const FeatureSet& data, std::span<const ClassLabel> classes, std::size_t count,
                      std::uint64_t seed) {
  FeatureSet out;
  out.sample_shape = data.sample_shape;
  for (auto c : classes) {
    auto idx = indices_of_class(data, c);
    if (idx.size() < count)
      throw ConfigError("probe", "class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                                     " training images, fewer than the probe size " + std::to_string(count));
    Rng rng(derive_seed(seed, "class", static_cast<std::uint64_t>(c)));
    shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < count; ++i) out.append(data.sample(idx[i]), c);
  }
  return out;
}

std::size_t probe_count(const FeatureSet& data, std::span<const ClassLabel> classes, const ProbeSize& probe) {
  validate(probe);
  if (probe.per_class > 0) return probe.per_class;
  std::size_t smallest = static_cast<std::size_t>(-1);
  for (auto c : classes) smallest = std::min(smallest, indices_of_class(data, c).size());
  if (classes.empty() || smallest == 0) throw ConfigError("probe", "every new class needs training images");
  const auto n = static_cast<std::size_t>(std::llround(probe.fraction * static_cast<double>(smallest)));
  return std::clamp<std::size_t>(n, 1, smallest);
}

SampleOutputs probe_node(const Tree& tree, NodeId node, const FeatureSet& probe, std::span<const ClassLabel> classes) {
  const auto& n = tree.node(node);
  if (!n.classifier) throw TreeError("node " + std::to_string(node) + " is a leaf and cannot be probed");
  if (!n.trained) throw TreeError("node " + std::to_string(node) + " has not been trained");
  std::vector<std::vector<std::size_t>> per_class;
  for (auto c : classes) per_class.push_back(indices_of_class(probe, c));
  const std::size_t images = per_class.empty() ? 0 : per_class.front().size();
  for (const auto& p : per_class)
    if (p.size() != images || images == 0) throw ConfigError("probe", "every class needs the same, nonzero image count");

  SampleOutputs out{n.classifier->outputs(), classes.size(), images, {}};
  out.values.resize(out.children * out.classes * out.images);
  for (std::size_t m = 0; m < classes.size(); ++m) {
    const auto scores = n.classifier->forward(make_batch(probe, per_class[m]));
    for (std::size_t i = 0; i < images; ++i)
      for (std::size_t k = 0; k < out.children; ++k) out(k, m, i) = scores[i * out.children + k];
  }
  return out;
}

FeatureSet node_training_set(const Tree& tree, NodeId node, const FeatureSet& data) {
  const auto& lt = tree.node(node).labels;
  FeatureSet out;
  out.sample_shape = data.sample_shape;
  out.values.reserve(data.values.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    if (const auto j = lt.find(data.labels[i])) out.append(data.sample(i), static_cast<ClassLabel>(*j));
  return out;
}

AccuracyResult evaluate_accuracy(const Tree& tree, const FeatureSet& test) {
  std::map<ClassLabel, ClassAccuracy> per;
  for (auto c : test.labels)
    if (!per.contains(c)) {
      if (!tree.has_class(c)) throw ConfigError("test", "class " + std::to_string(c) + " is not known to the tree");
      per[c].label = c;
    }
  AccuracyResult r;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < test.size(); start += kEvalChunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(test.size(), start + kEvalChunk); ++i) idx.push_back(i);
    const auto predicted = predict(tree, make_batch(test, idx));
    for (std::size_t b = 0; b < idx.size(); ++b) {
      auto& pc = per[test.labels[idx[b]]];
      ++pc.total;
      if (predicted[b] == pc.label) ++pc.correct;
    }
  }
  for (const auto& [c, pc] : per) {
    r.per_class.push_back(pc);
    r.correct += pc.correct;
    r.total += pc.total;
  }
  return r;
}

TopologySummary summarize_topology(const Tree& tree) {
  TopologySummary t;
  for (const auto& [id, n] : tree.nodes()) {
    ++t.nodes;
    if (n.is_leaf()) {
      ++t.leaves;
    } else if (id != tree.root()) {
      ++t.branches;
    }
    t.depth = std::max(t.depth, tree.depth(id));
    if (n.classifier) t.weights += count_weights(n.classifier->spec());
  }
  return t;
}

StageReport run_initial_stage(Tree& tree, const FeatureSet& train, const FeatureSet& test,
                              const NodeTrainer& trainer) {
  StageReport r;
  r.stage = 0;
  r.model = "tree";
  r.new_classes = tree.classes();
  std::vector<NodeId> ids;
  for (const auto& [id, n] : tree.nodes())
    if (!n.is_leaf()) ids.push_back(id);
  std::stable_partition(ids.begin(), ids.end(), [&](NodeId id) { return id == tree.root(); });
  retrain(tree, ids, train, trainer, r);
  tree.clear_changed();
  finish(tree, test, r);
  return r;
}

StageReport run_incremental_stage(Tree& tree, const StageConfig& config, const FeatureSet& train,
                                  const FeatureSet& test, const NodeTrainer& trainer) {
  StageReport r;
  r.stage = config.index;
  r.model = "tree";
  r.new_classes = config.new_classes;
  if (!config.new_classes.empty()) {
    std::set<ClassLabel> seen;
    for (auto c : config.new_classes) {
      if (tree.has_class(c)) throw ConfigError("stage.new_classes", "class " + std::to_string(c) + " is already known");
      if (!seen.insert(c).second) throw ConfigError("stage.new_classes", "class " + std::to_string(c) + " is repeated");
    }
    tree.clear_changed();
    StageRun run{tree, config, train, probe_count(train, config.new_classes, config.probe), r};
    run.grow_at(tree.root(), config.new_classes, true);

    std::vector<NodeId> ids{tree.root()};
    for (auto id : tree.changed())
      if (id != tree.root() && tree.contains(id) && !tree.node(id).is_leaf()) ids.push_back(id);
    retrain(tree, ids, train, trainer, r);
    tree.clear_changed();
  }
  finish(tree, test, r);
  return r;
}

}  // namespace treecnn
