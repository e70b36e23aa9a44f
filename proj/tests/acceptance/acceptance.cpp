// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "reference_grow.hpp"
#include "stub_classifiers.hpp"
#include "treecnn/bench/config.hpp"
#include "treecnn/bench/run.hpp"
#include "treecnn/bench/tables.hpp"
#include "treecnn/common/error.hpp"
#include "treecnn/data/cifar.hpp"
#include "treecnn/data/idx.hpp"
#include "treecnn/growth/growth.hpp"
#include "treecnn/nn/optimizer.hpp"
#include "treecnn/nn/specs.hpp"
#include "treecnn/train/incremental.hpp"
#include "treecnn/tree/snapshot.hpp"

namespace fs = std::filesystem;
using namespace treecnn;
using namespace treecnn::testing;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (passed) detail.clear();
    passed = false;
    detail += (detail.empty() ? "" : "; ") + what;
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fixed(double v, int digits = 2) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) out.push_back(part);
  return out;
}

// 1. Normalized fine-tuning effort of the large baseline network, CIFAR-100
// with 500 training images per class, reference B:V at 100 classes.
Outcome effort_table() {
  // rows: 20, 30, ..., 100 classes; columns B:I..B:V
  const double published[9][5] = {
      {0.08, 0.17, 0.19, 0.20, 0.20}, {0.12, 0.25, 0.29, 0.30, 0.30}, {0.16, 0.34, 0.38, 0.39, 0.40},
      {0.20, 0.42, 0.48, 0.49, 0.50}, {0.24, 0.51, 0.58, 0.59, 0.60}, {0.28, 0.60, 0.67, 0.69, 0.70},
      {0.33, 0.68, 0.77, 0.79, 0.80}, {0.37, 0.77, 0.87, 0.89, 0.90}, {0.41, 0.86, 0.97, 1.00, 1.00}};
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::size_t> counts;
  for (std::size_t n = 20; n <= 100; n += 10) counts.push_back(n);
  const auto csv = bench::analytic_effort_csv("network-b", counts, 500, 100);
  const double elapsed = seconds_since(start);

  const auto lines = split(csv, '\n');
  o.require(lines.size() == 10, "expected 9 rows");
  double worst = 0;
  std::size_t cells = 0;
  for (std::size_t r = 0; r < 9 && r + 1 < lines.size(); ++r) {
    const auto f = split(lines[r + 1], ',');
    o.require(f.size() == 6 && f[0] == std::to_string(counts[r]), "bad row " + lines[r + 1]);
    if (f.size() != 6) continue;
    for (std::size_t m = 0; m < 5; ++m) {
      const double diff = std::abs(std::stod(f[m + 1]) - published[r][m]);
      worst = std::max(worst, diff);
      ++cells;
      o.require(diff <= 0.01 + 1e-9, std::to_string(counts[r]) + " classes column " + std::to_string(m + 1) +
                                         " off by " + fixed(diff, 4));
    }
  }
  o.require(cells == 45, "compared " + std::to_string(cells) + " cells");
  o.require(elapsed < 1.0, "took " + fixed(elapsed, 3) + " s");
  if (o.passed) o.detail = "45 cells, max |diff| " + fixed(worst, 4) + ", " + fixed(elapsed, 4) + " s";
  return o;
}

ChildSummary leaf(NodeId id) { return {id, true, 0, true}; }
ChildSummary branch(NodeId id, std::size_t children) { return {id, false, children, true}; }

// Column whose softmax equals `likelihood`.
GrowthInput single_column(std::vector<ChildSummary> children, const std::vector<double>& likelihood) {
  GrowthInput in;
  in.node = 0;
  in.children = std::move(children);
  in.new_classes = {42};
  in.averaged = Matrix(likelihood.size(), 1);
  for (std::size_t k = 0; k < likelihood.size(); ++k) in.averaged(k, 0) = std::log(likelihood[k]);
  return in;
}

// 2. Worked placement examples.
Outcome growth_examples() {
  Outcome o;
  GrowthConfig cfg;  // alpha = beta = 0.1
  cfg.max_children = 5;

  // v1 = .48, v2 = .45, v3 = .05 with n2 a leaf: merge n2 into n1, add there
  auto plan = grow(single_column({leaf(1), leaf(2), leaf(3), leaf(4)}, {0.48, 0.45, 0.05, 0.02}), cfg);
  o.require(plan.actions.size() == 1, "merge example: one action");
  if (plan.actions.size() == 1) {
    const auto& a = plan.actions[0];
    o.require(a.kind == PlacementKind::merge_then_add && a.target == 1 && a.absorbed == 2 && a.label == 42,
              "merge example gave " + plan_to_text(plan));
  }

  // v = .34, .33, .33: neither margin holds, so a new leaf under the grown node
  plan = grow(single_column({leaf(1), leaf(2), leaf(3)}, {0.34, 0.33, 0.33}), cfg);
  o.require(plan.actions.size() == 1 && plan.actions[0].kind == PlacementKind::new_leaf && plan.actions[0].target == 0,
            "new-leaf example gave " + plan_to_text(plan));

  // two children and alpha = 0: every class is added to one of them
  GrowthConfig zero;
  zero.alpha = 0;
  Rng rng(7);
  std::size_t placed = 0;
  for (int trial = 0; trial < 500; ++trial) {
    GrowthInput in;
    in.node = 0;
    in.children = {branch(1, 1 + uniform_index(rng, 3)), branch(2, 1 + uniform_index(rng, 3))};
    const std::size_t m = 1 + uniform_index(rng, 4);
    in.averaged = Matrix(2, m);
    for (std::size_t c = 0; c < m; ++c) {
      in.new_classes.push_back(static_cast<ClassLabel>(c));
      in.averaged(0, c) = uniform01(rng) * 4;
      in.averaged(1, c) = uniform_index(rng, 5) == 0 ? in.averaged(0, c) : uniform01(rng) * 4;
    }
    const auto p = grow(in, zero);
    for (const auto& a : p.actions) {
      ++placed;
      const bool higher = a.target == (in.averaged(0, static_cast<std::size_t>(a.label)) >=
                                               in.averaged(1, static_cast<std::size_t>(a.label))
                                           ? 1u
                                           : 2u);
      o.require(a.kind == PlacementKind::add_to_child, "alpha = 0 gave " + plan_to_text(p));
      o.require(higher || in.averaged(0, a.label) == in.averaged(1, a.label), "alpha = 0 chose the weaker child");
    }
  }
  if (o.passed) o.detail = "merge, new leaf, and " + std::to_string(placed) + " alpha=0 placements all add-to-child";
  return o;
}

// 3. grow() against the straight-line reference.
Outcome reference_equivalence() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  Rng rng(1234);
  std::size_t compared = 0, both_threw = 0;
  std::map<PlacementKind, std::size_t> kinds;
  for (int trial = 0; trial < 1500 && o.passed; ++trial) {
    GrowthConfig cfg;
    const auto in = random_growth_input(rng, cfg);
    std::string got, want;
    bool got_threw = false, want_threw = false;
    try {
      const auto plan = grow(in, cfg);
      got = plan_to_text(plan);
      for (const auto& a : plan.actions) ++kinds[a.kind];
    } catch (const TreeError&) {
      got_threw = true;
    }
    try {
      want = plan_to_text(reference_grow(in, cfg));
    } catch (const TreeError&) {
      want_threw = true;
    }
    o.require(got_threw == want_threw && got == want, "trial " + std::to_string(trial) + " differs");
    if (got_threw) {
      ++both_threw;
    } else {
      ++compared;
    }
  }
  const double elapsed = seconds_since(start);
  o.require(compared >= 1000, "only " + std::to_string(compared) + " plans compared");
  o.require(kinds.size() == 3, "not every action kind was exercised");
  o.require(elapsed < 30.0, "took " + fixed(elapsed) + " s");
  if (o.passed)
    o.detail = std::to_string(compared) + " identical plans (" + std::to_string(kinds[PlacementKind::add_to_child]) +
               " add, " + std::to_string(kinds[PlacementKind::merge_then_add]) + " merge, " +
               std::to_string(kinds[PlacementKind::new_leaf]) + " new leaf), " + fixed(elapsed) + " s";
  return o;
}

// 4. Gradients, softmax normalization and reproducible training.
Outcome numeric_engine() {
  Outcome o;
  double worst = 0;
  std::set<LayerKind> kinds;
  for (const auto& spec : gradient_check_specs()) {
    for (const auto& l : spec.layers) kinds.insert(l.kind);
    for (const auto& e : gradient_errors(spec, 4)) {
      worst = std::max(worst, e.relative);
      o.require(e.relative < 1e-3, e.layer + " param " + std::to_string(e.param) + " relative error " +
                                       std::to_string(e.relative));
    }
  }
  o.require(kinds.size() == 8, "only " + std::to_string(kinds.size()) + " layer kinds covered");

  Rng rng(3);
  double softmax_err = 0;
  const Network net(specs::desk_node(10), 11);
  Tensor x({8, 1, 28, 28});
  for (auto& v : x.values()) v = static_cast<float>(uniform01(rng) * 40 - 20);
  const auto p = net.probabilities(x);
  for (std::size_t r = 0; r < 8; ++r) {
    double sum = 0;
    for (std::size_t c = 0; c < 10; ++c) sum += p[r * 10 + c];
    softmax_err = std::max(softmax_err, std::abs(sum - 1.0));
  }
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + uniform_index(rng, 9), m = 1 + uniform_index(rng, 12);
    Matrix avg(k, m);
    for (auto& v : avg.data) v = (uniform01(rng) - 0.5) * 60;
    std::vector<bool> mask(k, false);
    for (std::size_t r = 1; r < k; ++r) mask[r] = uniform_index(rng, 4) == 0;
    const auto l = compute_likelihood(avg, mask);
    for (std::size_t c = 0; c < m; ++c) {
      double sum = 0;
      for (std::size_t r = 0; r < k; ++r) sum += l(r, c);
      softmax_err = std::max(softmax_err, std::abs(sum - 1.0));
    }
  }
  o.require(softmax_err <= 1e-6, "softmax sums off by " + std::to_string(softmax_err));

  FeatureSet data;
  data.sample_shape = {1, 12, 12};
  std::vector<float> img(144);
  for (std::size_t i = 0; i < 90; ++i) {
    const auto c = static_cast<ClassLabel>(i % 3);
    for (std::size_t q = 0; q < img.size(); ++q)
      img[q] = static_cast<float>(uniform01(rng) - 0.5 + ((q / 12 + static_cast<std::size_t>(c)) % 3 == 0));
    data.append(img, c);
  }
  TrainingSchedule s;
  s.epochs = 3;
  s.batch_size = 16;
  s.learning_rate = 0.05;
  s.flip_probability = 0.5;
  s.seed = 77;
  Network a(specs::desk_node(3, {1, 12, 12}), 5), b(specs::desk_node(3, {1, 12, 12}), 5);
  const auto ra = train_network(a, data, s);
  const auto rb = train_network(b, data, s);
  o.require(ra.epoch_loss == rb.epoch_loss && a.checksum() == b.checksum(), "two fixed-seed runs differ");
  if (o.passed)
    o.detail = "8 layer kinds, max gradient error " + std::to_string(worst) + ", max softmax |sum-1| " +
               std::to_string(softmax_err) + ", identical weights after two runs";
  return o;
}

// 5. Randomized 5-stage runs over one-hot stub classifiers.
Outcome structural_fuzz() {
  constexpr std::size_t kClasses = 60;
  Outcome o;
  Rng rng(2718);
  std::size_t stages = 0, untouched = 0;
  std::map<PlacementKind, std::size_t> kinds;
  std::size_t deepest = 0;

  const auto check = [&](const Tree& tree, const std::vector<ClassLabel>& known, const std::string& where) {
    for (const auto& problem : validate_tree(tree)) o.require(false, where + ": " + problem);
    auto sorted = known;
    std::sort(sorted.begin(), sorted.end());
    o.require(tree.classes() == sorted, where + ": leaf classes differ from the classes added");
    std::map<ClassLabel, std::size_t> leaves;
    for (const auto& [id, n] : tree.nodes()) {
      if (n.leaf_class) ++leaves[*n.leaf_class];
      if (id != tree.root() && !n.is_leaf())
        o.require(n.children.size() <= tree.limits().max_children, where + ": node over max_children");
      deepest = std::max(deepest, tree.depth(id));
      o.require(tree.depth(id) <= tree.limits().max_depth, where + ": node below max_depth");
    }
    for (auto c : known) {
      o.require(leaves[c] == 1, where + ": class " + std::to_string(c) + " has " + std::to_string(leaves[c]) + " leaves");
      try {
        const auto path = tree.resolve(c);
        o.require(tree.node(path.back()).leaf_class == c, where + ": route of " + std::to_string(c));
      } catch (const TreeError& e) {
        o.require(false, where + ": " + e.what());
      }
    }
  };

  for (int trial = 0; trial < 40 && o.passed; ++trial) {
    const TreeLimits limits{2 + uniform_index(rng, 4), 2 + uniform_index(rng, 2)};
    std::vector<ClassLabel> pool(kClasses);
    std::iota(pool.begin(), pool.end(), 0);
    shuffle(pool.begin(), pool.end(), rng);
    std::size_t next = 0;
    std::vector<std::vector<ClassLabel>> groups(2 + uniform_index(rng, 3));
    for (auto& g : groups)
      for (std::size_t i = 0, n = 1 + uniform_index(rng, std::min<std::size_t>(3, limits.max_children)); i < n; ++i)
        g.push_back(pool[next++]);
    std::vector<ClassLabel> known;
    for (const auto& g : groups) known.insert(known.end(), g.begin(), g.end());

    auto tree = Tree::build(stub_architecture(kClasses, static_cast<std::uint64_t>(trial)), limits, groups);
    auto data = one_hot_set(kClasses, known, 2);
    run_initial_stage(tree, data, data, oracle_trainer());
    check(tree, known, "trial " + std::to_string(trial) + " stage 0");

    for (std::size_t t = 1; t <= 5 && o.passed; ++t) {
      const auto where = "trial " + std::to_string(trial) + " stage " + std::to_string(t);
      StageConfig sc;
      sc.index = t;
      for (std::size_t i = 0, n = 1 + uniform_index(rng, 4); i < n && next < kClasses; ++i)
        sc.new_classes.push_back(pool[next++]);
      sc.probe.per_class = 2;
      const std::array<double, 3> thresholds{0.0, 0.1, 0.2};
      sc.growth.alpha = thresholds[uniform_index(rng, 3)];
      sc.growth.beta = thresholds[uniform_index(rng, 3)];
      sc.growth.seed = rng();
      sc.seed = rng();

      // random affinities of the new classes for existing children
      for (const auto& [id, n] : tree.nodes()) {
        if (n.is_leaf()) continue;
        for (auto c : sc.new_classes)
          if (uniform01(rng) < 0.7)
            steer(*tree.node(id).classifier, c, uniform_index(rng, n.children.size()),
                  static_cast<float>(0.5 + 5 * uniform01(rng)));
      }
      std::map<NodeId, std::uint64_t> before;
      for (const auto& [id, n] : tree.nodes())
        if (!n.is_leaf()) before[id] = tree.node_checksum(id);

      known.insert(known.end(), sc.new_classes.begin(), sc.new_classes.end());
      data = one_hot_set(kClasses, known, 2);
      StageReport report;
      try {
        report = run_incremental_stage(tree, sc, data, data, oracle_trainer());
      } catch (const Error& e) {
        o.require(false, where + ": " + e.what());
        break;
      }
      ++stages;
      for (const auto& plan : report.plans)
        for (const auto& a : plan.actions) ++kinds[a.kind];
      check(tree, known, where);
      std::set<NodeId> retrained;
      for (const auto& r : report.retrained) retrained.insert(r.node);
      for (const auto& [id, sum] : before) {
        if (retrained.contains(id) || !tree.contains(id)) continue;
        ++untouched;
        o.require(tree.node_checksum(id) == sum, where + ": untouched node " + std::to_string(id) + " changed");
      }
      o.require(report.accuracy.percent() == 100.0, where + ": oracle tree misroutes");
    }
  }
  o.require(kinds.size() == 3, "not every action kind occurred");
  o.require(untouched > 0, "no untouched nodes were compared");
  if (o.passed)
    o.detail = std::to_string(stages) + " stages, " + std::to_string(untouched) + " untouched nodes unchanged, " +
               std::to_string(kinds[PlacementKind::add_to_child]) + "/" +
               std::to_string(kinds[PlacementKind::merge_then_add]) + "/" +
               std::to_string(kinds[PlacementKind::new_leaf]) + " add/merge/new, depth up to " +
               std::to_string(deepest);
  return o;
}

// Weight count from layer shapes alone: conv out*in*k*k, FC out*in.
std::uint64_t weights_by_hand(const NetworkSpec& spec, const std::function<bool(const LayerSpec&)>& keep) {
  const auto shapes = infer_shapes(spec);
  std::uint64_t total = 0;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const auto& layer = spec.layers[l];
    if (!keep(layer)) continue;
    const auto& in = l == 0 ? spec.input : shapes[l - 1];
    if (layer.kind == LayerKind::conv) total += layer.out_channels * in[0] * layer.kernel * layer.kernel;
    if (layer.kind == LayerKind::fully_connected) total += layer.out_features * shape_size(in);
  }
  return total;
}

struct DeskRun {
  bool ran = false;
  std::string error;
  double seconds = 0;
  fs::path dir;
  bench::RunConfig config;
  std::vector<StageReport> reports;
};

const DeskRun& desk_run() {
  static const DeskRun run = [] {
    DeskRun r;
    r.dir = fs::temp_directory_path() / "treecnn-acceptance-desk";
    fs::remove_all(r.dir);
    const auto start = std::chrono::steady_clock::now();
    try {
      r.config = bench::load_run_config(fs::path(TREECNN_SOURCE_DIR) / "configs" / "desk-7seg.json");
      r.reports = bench::run_experiment(r.config, r.dir).reports;
      r.ran = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.seconds = seconds_since(start);
    return r;
  }();
  return run;
}

// 6. Desk-scale run: 6 initial classes, then 4 more.
Outcome desk_end_to_end() {
  Outcome o;
  const auto& run = desk_run();
  if (!run.ran) {
    o.require(false, run.error);
    return o;
  }
  const auto& c = run.config;
  o.require(c.initial.size() == 2 && bench::classes_through(c, 0).size() == 6, "initial tree is not 6 classes");
  o.require(c.stages.size() == 1 && c.stages[0].size() == 4, "not one 4-class stage");
  o.require(c.training.epochs <= 20, "more than 20 epochs");
  std::uint64_t largest = 0;
  for (const auto& r : run.reports)
    for (const auto& n : r.retrained) largest = std::max(largest, n.weights);
  o.require(largest <= 50000, "a node has " + std::to_string(largest) + " weights");
  o.require(run.seconds < 1800, "took " + fixed(run.seconds / 60) + " min");
  if (run.reports.size() != 2) {
    o.require(false, "expected 2 stage reports");
    return o;
  }
  const auto old = bench::classes_through(c, 0);
  const double before = run.reports[0].accuracy.percent_over(old);
  const double after_old = run.reports[1].accuracy.percent_over(old);
  const double overall = run.reports[1].accuracy.percent();
  o.require(overall >= 70.0, "final accuracy " + fixed(overall) + "%");
  o.require(before - after_old <= 10.0, "old classes dropped " + fixed(before - after_old) + " points");
  if (o.passed)
    o.detail = "final " + fixed(overall) + "%, old classes " + fixed(before) + "% -> " + fixed(after_old) +
               "%, largest node " + std::to_string(largest) + " weights, " + fixed(run.seconds) + " s";
  return o;
}

// 7. Tree effort between fine-tuning only the classifier and full retraining.
Outcome effort_ordering() {
  Outcome o;
  const auto& run = desk_run();
  if (!run.ran || run.reports.empty()) {
    o.require(false, "desk run unavailable: " + run.error);
    return o;
  }
  const auto manifest = bench::read_manifest(run.dir);
  std::string rows;
  for (const auto& r : run.reports) {
    const auto classes = bench::classes_through(run.config, r.stage);
    std::uint64_t samples = 0;
    for (auto cl : classes) samples += manifest.train_counts.at(cl);
    const auto spec = specs::by_name(run.config.baseline.network, classes.size(), manifest.image_shape);
    const auto full = weights_by_hand(spec, [](const LayerSpec&) { return true; }) * samples;
    const auto classifier = weights_by_hand(spec, [](const LayerSpec& l) { return l.block == "FC"; }) * samples;
    o.require(classifier < r.effort && r.effort < full,
              "stage " + std::to_string(r.stage) + ": " + std::to_string(classifier) + " < " +
                  std::to_string(r.effort) + " < " + std::to_string(full) + " fails");
    const double ref = static_cast<double>(manifest.effort_reference);
    rows += (rows.empty() ? "" : ", ") + std::string("stage ") + std::to_string(r.stage) + " " +
            fixed(classifier / ref, 3) + " < " + fixed(r.effort / ref, 3) + " < " + fixed(full / ref, 3);
  }
  if (o.passed) o.detail = "B:I < tree < B:V: " + rows;
  return o;
}

std::size_t count_matches(const std::string& text, const std::string& pattern) {
  const std::regex re(pattern);
  return static_cast<std::size_t>(
      std::distance(std::sregex_iterator(text.begin(), text.end(), re), std::sregex_iterator()));
}

// 8. Byte-exact data files and the CIFAR-10 topology after one stage.
Outcome file_formats() {
  Outcome o;
  const fs::path data = TREECNN_TEST_DATA;
  for (const auto& [file, variant] : {std::pair{"cifar10_two.bin", CifarVariant::cifar10},
                                      std::pair{"cifar100_two.bin", CifarVariant::cifar100}}) {
    std::ostringstream out;
    write_cifar(load_cifar(data / file, variant), out, variant);
    o.require(out.str() == file_bytes(data / file), std::string(file) + " does not round-trip");
  }
  for (const auto& [images, labels] : {std::pair{"one_image.idx", "one_label.idx"},
                                       std::pair{"empty_images.idx", "empty_labels.idx"}}) {
    const auto [a, b] = split_to_idx(load_idx(data / images, data / labels));
    std::ostringstream oa, ob;
    write_idx(a, oa);
    write_idx(b, ob);
    o.require(oa.str() == file_bytes(data / images), std::string(images) + " does not round-trip");
    o.require(ob.str() == file_bytes(data / labels), std::string(labels) + " does not round-trip");
  }

  // Vehicles {airplane, automobile, ship} and Animals {cat, dog, horse}; with
  // alpha = 0 the four new classes each join the branch they resemble.
  constexpr std::size_t kClasses = 10;
  const std::vector<std::vector<ClassLabel>> groups{{0, 1, 8}, {3, 5, 7}};
  auto tree = Tree::build(stub_architecture(kClasses), {10, 2}, groups);
  auto seen = one_hot_set(kClasses, {0, 1, 8, 3, 5, 7}, 2);
  run_initial_stage(tree, seen, seen, oracle_trainer());
  auto& root = *tree.node(tree.root()).classifier;
  steer(root, 9, 0, 2.0f);  // truck
  for (ClassLabel c : {2, 4, 6}) steer(root, c, 1, 2.0f);  // bird, deer, frog
  StageConfig sc;
  sc.new_classes = {9, 2, 4, 6};
  sc.growth.alpha = 0;
  sc.probe.per_class = 2;
  const auto all = one_hot_set(kClasses, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 2);
  run_incremental_stage(tree, sc, all, all, oracle_trainer());
  const auto dot = to_dot(tree, cifar10_class_names());
  const auto branches = count_matches(dot, "class=\"branch\"");
  const auto leaves = count_matches(dot, "class=\"leaf\"");
  o.require(branches == 2, std::to_string(branches) + " branch nodes in DOT");
  o.require(leaves == 10, std::to_string(leaves) + " leaves in DOT");
  const auto vehicles = tree.node(tree.root()).children[0];
  o.require(tree.node(vehicles).children.size() == 4 && tree.node(tree.leaf_of(9).value()).parent == vehicles,
            "truck is not under the vehicles branch");
  if (o.passed) o.detail = "4 fixtures byte-identical, DOT has 2 branches and 10 leaves";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"analytic fine-tuning effort table", effort_table},
      {"growth worked examples", growth_examples},
      {"growth matches the re-sorting reference", reference_equivalence},
      {"numeric engine", numeric_engine},
      {"structural invariants under random growth", structural_fuzz},
      {"desk-scale end-to-end", desk_end_to_end},
      {"tree effort between B:I and B:V", effort_ordering},
      {"file formats and DOT topology", file_formats},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = std::string("threw: ") + e.what();
    }
    if (!o.passed) ++failed;
    std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << i + 1 << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
