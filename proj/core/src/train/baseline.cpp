#include "treecnn/train/baseline.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "treecnn/common/error.hpp"

namespace treecnn {

namespace {

constexpr std::size_t kEvalChunk = 256;

FeatureSet relabel(const BaselineState& state, const FeatureSet& data) {
  std::map<ClassLabel, ClassLabel> index;
  for (std::size_t i = 0; i < state.classes.size(); ++i) index[state.classes[i]] = static_cast<ClassLabel>(i);
  FeatureSet out;
  out.sample_shape = data.sample_shape;
  out.values = data.values;
  for (auto c : data.labels) {
    const auto it = index.find(c);
    if (it == index.end()) throw ConfigError("train", "class " + std::to_string(c) + " is not known to the baseline");
    out.labels.push_back(it->second);
  }
  return out;
}

StageReport train_stage(BaselineState& state, std::string model, std::size_t stage, bool fresh,
                        std::span<const ClassLabel> new_classes, const FeatureSet& train, const FeatureSet& test,
                        const NodeTrainer& trainer, const std::vector<bool>* trainable, std::uint64_t weights) {
  const auto data = relabel(state, train);
  trainer(state.net, data, TrainJob{kNoNode, stage, fresh, trainable});
  StageReport r;
  r.stage = stage;
  r.model = std::move(model);
  r.new_classes.assign(new_classes.begin(), new_classes.end());
  r.classes = state.classes;
  std::sort(r.classes.begin(), r.classes.end());
  r.retrained.push_back({kNoNode, "baseline", fresh, state.net.outputs(), weights, data.size()});
  const EffortTerm term{weights, data.size()};
  r.effort = training_effort(std::span(&term, 1));
  r.accuracy = evaluate_accuracy(state, test);
  return r;
}

}  // namespace

BaselineState make_baseline(const NetworkSpec& spec, std::span<const ClassLabel> classes, std::uint64_t seed) {
  if (classes.size() < 2) throw ConfigError("baseline", "needs at least two classes");
  return {Network(with_outputs(spec, classes.size()), seed), {classes.begin(), classes.end()}};
}

AccuracyResult evaluate_accuracy(const BaselineState& state, const FeatureSet& test) {
  std::map<ClassLabel, ClassAccuracy> per;
  for (auto c : test.labels)
    if (!per.contains(c)) {
      if (std::find(state.classes.begin(), state.classes.end(), c) == state.classes.end())
        throw ConfigError("test", "class " + std::to_string(c) + " is not known to the baseline");
      per[c].label = c;
    }
  std::vector<std::size_t> idx;
  const std::size_t n = state.net.outputs();
  for (std::size_t start = 0; start < test.size(); start += kEvalChunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(test.size(), start + kEvalChunk); ++i) idx.push_back(i);
    const auto scores = state.net.forward(make_batch(test, idx));
    for (std::size_t b = 0; b < idx.size(); ++b) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < n; ++k)
        if (scores[b * n + k] > scores[b * n + best]) best = k;
      auto& pc = per[test.labels[idx[b]]];
      ++pc.total;
      if (state.classes[best] == pc.label) ++pc.correct;
    }
  }
  AccuracyResult r;
  for (const auto& [c, pc] : per) {
    r.per_class.push_back(pc);
    r.correct += pc.correct;
    r.total += pc.total;
  }
  return r;
}

StageReport run_baseline_initial(BaselineState& state, const FeatureSet& train, const FeatureSet& test,
                                 const NodeTrainer& trainer) {
  return train_stage(state, std::string(to_string(FineTuneMode::b5)), 0, true, state.classes, train, test, trainer,
                     nullptr, count_weights(state.net.spec()));
}

StageReport run_baseline_stage(BaselineState& state, FineTuneMode mode, std::size_t stage,
                               std::span<const ClassLabel> new_classes, const FeatureSet& train,
                               const FeatureSet& test, const NodeTrainer& trainer, std::uint64_t seed) {
  for (auto c : new_classes)
    if (std::find(state.classes.begin(), state.classes.end(), c) != state.classes.end())
      throw ConfigError("stage.new_classes", "class " + std::to_string(c) + " is already known");
  if (!new_classes.empty()) {
    std::vector<std::optional<std::size_t>> rows(state.classes.size() + new_classes.size());
    for (std::size_t i = 0; i < state.classes.size(); ++i) rows[i] = i;
    state.net.resize_outputs(rows, seed);
    state.classes.insert(state.classes.end(), new_classes.begin(), new_classes.end());
  }
  const auto mask = fine_tune_layers(state.net.spec(), mode);
  return train_stage(state, std::string(to_string(mode)), stage, false, new_classes, train, test, trainer, &mask,
                     fine_tune_weights(state.net.spec(), mode));
}

}  // namespace treecnn
