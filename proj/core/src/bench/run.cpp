#include "treecnn/bench/run.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "treecnn/common/error.hpp"
#include "treecnn/common/hash.hpp"
#include "treecnn/nn/checkpoint.hpp"
#include "treecnn/train/baseline.hpp"
#include "treecnn/tree/snapshot.hpp"

namespace treecnn::bench {

namespace fs = std::filesystem;

namespace {

std::string hex16(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string checkpoint_bytes(const Network& net) {
  std::ostringstream out;
  write_checkpoint(net, out);
  return out.str();
}

Network load_network(const fs::path& path, const NetworkSpec& spec) {
  std::istringstream in(read_file(path));
  return read_checkpoint(spec, in);
}

class Logger {
 public:
  explicit Logger(std::ostream* out) : out_(out), start_(std::chrono::steady_clock::now()) {}

  template <typename... Args>
  void operator()(const Args&... args) const {
    if (!out_) return;
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    char stamp[24];
    std::snprintf(stamp, sizeof stamp, "[%8.1fs] ", t);
    *out_ << stamp;
    (*out_ << ... << args);
    *out_ << std::endl;
  }

 private:
  std::ostream* out_;
  std::chrono::steady_clock::time_point start_;
};

std::string percent(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f%%", v);
  return buf;
}

Manifest fresh_manifest(const RunConfig& config, const PreparedData& data) {
  Manifest m;
  const auto text = to_text(config);
  m.run_id = config.name + "-" + hex16(fnv1a(text)).substr(0, 8);
  m.config = config;
  m.image_shape = data.image_shape;
  for (auto c : data.train.labels) ++m.train_counts[c];
  for (auto c : data.test.labels) ++m.test_counts[c];
  m.class_names = class_names(config.dataset);
  m.class_names.resize(config.dataset.num_classes);
  const auto all = classes_through(config, config.stages.size());
  const auto spec = baseline_spec(config, all.size(), data.image_shape);
  const EffortTerm reference{count_weights(spec), data.train.size()};
  m.effort_reference = training_effort(std::span(&reference, 1));
  return m;
}

StageEntry entry_for(const StageReport& r, std::string report_path) {
  return {r.stage, std::move(report_path), r.effort, r.accuracy.percent()};
}

// Rebuilds the manifest's stage lists from the reports on disk, dropping
// anything beyond the last contiguous report.
void sync_entries(const fs::path& dir, std::vector<StageEntry>& entries,
                  const std::function<std::string(std::size_t)>& report_path, std::size_t from, std::size_t to) {
  entries.clear();
  for (std::size_t t = from; t <= to; ++t) {
    const auto rel = report_path(t);
    if (!fs::exists(dir / rel)) break;
    entries.push_back(entry_for(report_from_text(read_file(dir / rel)), rel));
  }
}

}  // namespace

std::vector<ClassLabel> classes_through(const RunConfig& config, std::size_t stage) {
  std::vector<ClassLabel> out;
  for (const auto& g : config.initial) out.insert(out.end(), g.begin(), g.end());
  for (std::size_t t = 0; t < stage && t < config.stages.size(); ++t)
    out.insert(out.end(), config.stages[t].begin(), config.stages[t].end());
  return out;
}

PreparedData prepare_data(const RunConfig& config) {
  auto raw = load_dataset(config.dataset);
  const auto used = classes_through(config, config.stages.size());
  raw.train = select_classes(raw.train, used);
  raw.test = select_classes(raw.test, used);
  for (auto c : used) {
    const auto counts = raw.train.class_counts();
    if (static_cast<std::size_t>(c) >= counts.size() || counts[static_cast<std::size_t>(c)] == 0)
      throw ConfigError("classes", "class " + std::to_string(c) + " has no training images");
  }
  auto features = preprocess_pair(raw, config.preprocess);
  return {std::move(features.train), std::move(features.test), raw.train.image_shape};
}

RunResult run_experiment(const RunConfig& config, const fs::path& dir, const RunOptions& options) {
  validate(config);
  const Logger log(options.log);
  RunResult result;

  fs::create_directories(dir);
  const bool existing = fs::exists(layout::manifest(dir));
  if (existing) {
    const auto old = read_manifest(dir);
    if (to_text(old.config) != to_text(config))
      throw ConfigError("config", "run directory " + dir.string() + " holds a different configuration");
    if (const auto repaired = recover_run(dir)) log("repaired ", repaired, " interrupted commit(s)");
  }

  log("loading ", config.dataset.kind, " data");
  const auto data = prepare_data(config);
  log("train ", data.train.size(), " images, test ", data.test.size(), " images");
  auto manifest = existing ? read_manifest(dir) : fresh_manifest(config, data);
  const auto fresh = fresh_manifest(config, data);
  if (manifest.train_counts != fresh.train_counts || manifest.effort_reference != fresh.effort_reference)
    throw FormatError("run directory data does not match the dataset on disk");
  write_manifest(dir, manifest);

  const NodeTrainer trainer = options.trainer ? *options.trainer : sgd_trainer(training_schedule(config));
  const auto& names = manifest.class_names;
  const std::size_t last_stage = config.stages.size();

  // tree stages
  sync_entries(dir, manifest.stages, layout::stage_report, 0, last_stage);
  std::optional<Tree> tree;
  if (!manifest.stages.empty()) {
    const auto t = manifest.stages.back().index;
    const auto loader = [&](NodeId id, const NetworkSpec& spec) {
      return load_network(dir / layout::node_checkpoint(id), spec);
    };
    tree = tree_from_snapshot(read_file(dir / layout::stage_snapshot(t)), loader);
    result.stages_resumed = manifest.stages.size();
    for (const auto& e : manifest.stages) result.reports.push_back(report_from_text(read_file(dir / e.report)));
    log("resuming after stage ", t);
  }
  write_manifest(dir, manifest);

  for (std::size_t t = manifest.stages.size(); t <= last_stage; ++t) {
    if (options.stop_after && manifest.stages.size() >= *options.stop_after) return result;
    const auto known = classes_through(config, t);
    const auto train = select_classes(data.train, known);
    const auto test = select_classes(data.test, known);
    StageReport report;
    if (t == 0) {
      tree = Tree::build(node_architecture(config, data.image_shape), tree_limits(config), config.initial);
      log("stage 0: training ", tree->nodes().size() - known.size(), " classifiers on ", known.size(), " classes");
      report = run_initial_stage(*tree, train, test, trainer);
    } else {
      StageConfig sc;
      sc.index = t;
      sc.new_classes = config.stages[t - 1];
      sc.probe = config.probe;
      sc.growth = growth_config(config);
      sc.seed = derive_seed(config.seed, "probe", t);
      log("stage ", t, ": adding ", sc.new_classes.size(), " classes");
      report = run_incremental_stage(*tree, sc, train, test, trainer);
    }
    report.effort_reference = manifest.effort_reference;
    report.snapshot = layout::stage_snapshot(t);

    StageCommit commit;
    commit.report = layout::stage_report(t);
    commit.report_text = report_to_text(report);
    commit.files[layout::stage_snapshot(t)] = tree_snapshot(*tree);
    commit.files[layout::stage_dot(t)] = to_dot(*tree, names);
    for (const auto& r : report.retrained)
      commit.checkpoints[layout::node_checkpoint(r.node)] = checkpoint_bytes(*tree->node(r.node).classifier);
    commit_stage(dir, commit);
    manifest.stages.push_back(entry_for(report, commit.report));
    write_manifest(dir, manifest);
    log("stage ", t, " done: accuracy ", percent(report.accuracy.percent()), ", normalized effort ",
        *report.normalized_effort(), ", retrained ", report.retrained.size(), " node(s)");
    result.reports.push_back(std::move(report));
    ++result.stages_run;
  }

  // baselines
  if (config.baseline.train.empty()) return result;
  const auto spec_at = [&](std::size_t n) { return baseline_spec(config, n, data.image_shape); };
  const auto initial_classes = classes_through(config, 0);
  auto& initial_entries = manifest.baseline[layout::baseline_dir_name(std::nullopt)];
  const auto initial_report = [](std::size_t) { return layout::baseline_report(std::nullopt, 0); };
  sync_entries(dir, initial_entries, initial_report, 0, 0);
  if (initial_entries.empty()) {
    auto state = make_baseline(spec_at(initial_classes.size()), initial_classes, derive_seed(config.seed, "baseline-init"));
    log("baseline: training from scratch on ", initial_classes.size(), " classes");
    auto r = run_baseline_initial(state, select_classes(data.train, initial_classes),
                                  select_classes(data.test, initial_classes), trainer);
    r.effort_reference = manifest.effort_reference;
    StageCommit commit;
    commit.report = layout::baseline_report(std::nullopt, 0);
    commit.report_text = report_to_text(r);
    commit.checkpoints[layout::baseline_checkpoint(std::nullopt)] = checkpoint_bytes(state.net);
    commit_stage(dir, commit);
    initial_entries.push_back(entry_for(r, commit.report));
    write_manifest(dir, manifest);
  }

  for (auto mode : config.baseline.train) {
    const auto key = layout::baseline_dir_name(mode);
    auto& entries = manifest.baseline[key];
    const auto report_path = [mode](std::size_t t) { return layout::baseline_report(mode, t); };
    sync_entries(dir, entries, report_path, 1, last_stage);
    const auto done = entries.size();
    const auto classes = classes_through(config, done);
    const auto ckpt = done == 0 ? layout::baseline_checkpoint(std::nullopt) : layout::baseline_checkpoint(mode);
    BaselineState state{load_network(dir / ckpt, spec_at(classes.size())), classes};
    for (std::size_t t = done + 1; t <= last_stage; ++t) {
      const auto known = classes_through(config, t);
      log("baseline ", to_string(mode), " stage ", t);
      auto r = run_baseline_stage(state, mode, t, config.stages[t - 1], select_classes(data.train, known),
                                  select_classes(data.test, known), trainer,
                                  derive_seed(config.seed, "baseline-rows", t));
      r.effort_reference = manifest.effort_reference;
      StageCommit commit;
      commit.report = report_path(t);
      commit.report_text = report_to_text(r);
      commit.checkpoints[layout::baseline_checkpoint(mode)] = checkpoint_bytes(state.net);
      commit_stage(dir, commit);
      entries.push_back(entry_for(r, commit.report));
      write_manifest(dir, manifest);
      log("baseline ", to_string(mode), " stage ", t, " done: accuracy ", percent(r.accuracy.percent()));
    }
  }
  return result;
}

}  // namespace treecnn::bench
