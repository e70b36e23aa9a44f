#include "treecnn/bench/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "treecnn/common/error.hpp"
#include "treecnn/data/cifar.hpp"
#include "treecnn/data/idx.hpp"
#include "treecnn/data/schedule.hpp"
#include "treecnn/nn/specs.hpp"

namespace treecnn::bench {

namespace {

using json = nlohmann::ordered_json;

// Field access that reports the dotted path of whatever is wrong, including
// keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "must be an object");
  }

  std::string field(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  bool has(std::string_view key) const { return j_.contains(key); }

  const json& raw(std::string_view key) {
    seen_.insert(std::string(key));
    return j_.at(std::string(key));
  }

  template <typename T>
  void read(std::string_view key, T& out) {
    if (!has(key)) return;
    try {
      out = raw(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key), "has the wrong type");
    }
  }

  Fields object(std::string_view key) {
    static const json empty = json::object();
    if (!has(key)) return Fields(empty, field(key));
    return Fields(raw(key), field(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) throw ConfigError(field(k), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

ClassLabel class_from(const json& v, const std::vector<std::string>& names, const std::string& field) {
  if (v.is_number_integer()) return v.get<ClassLabel>();
  if (!v.is_string()) throw ConfigError(field, "class must be a name or an id");
  try {
    return parse_schedule("0: " + v.get<std::string>(), names).groups.at(0).at(0);
  } catch (const ConfigError& e) {
    throw ConfigError(field, e.what());
  }
}

std::vector<std::vector<ClassLabel>> groups_from(const json& v, const std::vector<std::string>& names,
                                                 const std::string& field) {
  if (!v.is_array()) throw ConfigError(field, "must be a list of class lists");
  std::vector<std::vector<ClassLabel>> out;
  for (std::size_t g = 0; g < v.size(); ++g) {
    const auto f = field + "[" + std::to_string(g) + "]";
    if (!v[g].is_array()) throw ConfigError(f, "must be a list of classes");
    std::vector<ClassLabel> group;
    for (const auto& c : v[g]) group.push_back(class_from(c, names, f));
    out.push_back(std::move(group));
  }
  return out;
}

template <typename T>
void at_least(const std::string& field, T value, T minimum) {
  if (value < minimum) throw ConfigError(field, "must be at least " + std::to_string(minimum));
}

}  // namespace

const std::vector<std::string>& class_names(const DatasetConfig& d) {
  static const auto numbered = [] {
    std::vector<std::string> v;
    for (int i = 0; i < 256; ++i) v.push_back(std::to_string(i));
    return v;
  }();
  if (d.kind == "cifar10") return cifar10_class_names();
  if (d.kind == "cifar100") return cifar100_class_names();
  if (d.kind == "seven-segment") return seven_segment_class_names();
  return numbered;
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("not valid JSON: ") + e.what());
  }
  RunConfig c;
  Fields top(j, "");
  top.read("name", c.name);
  top.read("seed", c.seed);

  {
    auto d = top.object("dataset");
    d.read("kind", c.dataset.kind);
    d.read("path", c.dataset.path);
    d.read("train_images", c.dataset.train_images);
    d.read("train_labels", c.dataset.train_labels);
    d.read("test_images", c.dataset.test_images);
    d.read("test_labels", c.dataset.test_labels);
    d.read("num_classes", c.dataset.num_classes);
    d.read("downsample", c.dataset.downsample);
    d.read("train_per_class", c.dataset.synthetic.train_per_class);
    d.read("test_per_class", c.dataset.synthetic.test_per_class);
    d.read("seed", c.dataset.synthetic.seed);
    d.read("noise", c.dataset.synthetic.noise);
    d.read("spurious_rate", c.dataset.synthetic.spurious_rate);
    d.finish();
    if (c.dataset.kind == "cifar10") c.dataset.num_classes = 10;
    if (c.dataset.kind == "cifar100") c.dataset.num_classes = 100;
    if (c.dataset.kind == "seven-segment") c.dataset.num_classes = 10;
  }
  {
    auto p = top.object("preprocess");
    p.read("gcn", c.preprocess.gcn);
    p.read("gcn_epsilon", c.preprocess.gcn_epsilon);
    p.read("zca", c.preprocess.zca);
    p.read("zca_regularization", c.preprocess.zca_regularization);
    p.finish();
  }
  {
    const auto& names = class_names(c.dataset);
    auto cl = top.object("classes");
    if (cl.has("schedule")) {
      std::string file, layout = "leaves";
      cl.read("schedule", file);
      cl.read("initial", layout);
      if (layout != "leaves") throw ConfigError(cl.field("initial"), "with a schedule file only \"leaves\" is supported");
      std::filesystem::path path(file);
      if (path.is_relative() && !base_dir.empty() && !std::filesystem::exists(path)) path = base_dir / path;
      ClassSchedule schedule;
      try {
        schedule = load_schedule(path, names);
      } catch (const Error& e) {
        throw ConfigError(cl.field("schedule"), e.what());
      }
      if (schedule.groups.empty()) throw ConfigError(cl.field("schedule"), "has no groups");
      for (auto label : schedule.groups[0]) c.initial.push_back({label});
      c.stages.assign(schedule.groups.begin() + 1, schedule.groups.end());
    } else {
      if (cl.has("initial")) c.initial = groups_from(cl.raw("initial"), names, cl.field("initial"));
      if (cl.has("stages")) c.stages = groups_from(cl.raw("stages"), names, cl.field("stages"));
    }
    cl.finish();
  }
  {
    auto t = top.object("tree");
    t.read("root", c.tree.root);
    t.read("branch", c.tree.branch);
    t.read("shrink", c.tree.shrink);
    t.read("max_children", c.tree.max_children);
    t.read("max_depth", c.tree.max_depth);
    t.finish();
  }
  {
    auto g = top.object("growth");
    g.read("alpha", c.alpha);
    g.read("beta", c.beta);
    g.finish();
  }
  {
    auto p = top.object("probe");
    p.read("per_class", c.probe.per_class);
    p.read("fraction", c.probe.fraction);
    p.finish();
  }
  {
    auto t = top.object("training");
    auto& s = c.training;
    t.read("epochs", s.epochs);
    t.read("batch_size", s.batch_size);
    t.read("learning_rate", s.learning_rate);
    t.read("lr_decay_factor", s.lr_decay_factor);
    t.read("lr_decay_start", s.lr_decay_start);
    t.read("lr_decay_interval", s.lr_decay_interval);
    t.read("momentum", s.momentum);
    t.read("weight_decay", s.weight_decay);
    t.read("flip_probability", s.flip_probability);
    t.finish();
  }
  {
    auto b = top.object("baseline");
    b.read("network", c.baseline.network);
    b.read("shrink", c.baseline.shrink);
    if (b.has("train")) {
      const auto& modes = b.raw("train");
      if (!modes.is_array()) throw ConfigError(b.field("train"), "must be a list of modes");
      for (const auto& m : modes) {
        if (!m.is_string()) throw ConfigError(b.field("train"), "modes are strings such as \"B:II\"");
        try {
          c.baseline.train.push_back(fine_tune_mode_from_string(m.get<std::string>()));
        } catch (const ConfigError& e) {
          throw ConfigError(b.field("train"), e.what());
        }
      }
    }
    b.finish();
  }
  top.finish();
  validate(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

std::string to_text(const RunConfig& c) {
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  const auto& d = c.dataset;
  j["dataset"] = {{"kind", d.kind},
                  {"path", d.path},
                  {"train_images", d.train_images},
                  {"train_labels", d.train_labels},
                  {"test_images", d.test_images},
                  {"test_labels", d.test_labels},
                  {"num_classes", d.num_classes},
                  {"downsample", d.downsample},
                  {"train_per_class", d.synthetic.train_per_class},
                  {"test_per_class", d.synthetic.test_per_class},
                  {"seed", d.synthetic.seed},
                  {"noise", d.synthetic.noise},
                  {"spurious_rate", d.synthetic.spurious_rate}};
  j["preprocess"] = {{"gcn", c.preprocess.gcn},
                     {"gcn_epsilon", c.preprocess.gcn_epsilon},
                     {"zca", c.preprocess.zca},
                     {"zca_regularization", c.preprocess.zca_regularization}};
  j["classes"] = {{"initial", c.initial}, {"stages", c.stages}};
  j["tree"] = {{"root", c.tree.root},
               {"branch", c.tree.branch},
               {"shrink", c.tree.shrink},
               {"max_children", c.tree.max_children},
               {"max_depth", c.tree.max_depth}};
  j["growth"] = {{"alpha", c.alpha}, {"beta", c.beta}};
  j["probe"] = {{"per_class", c.probe.per_class}, {"fraction", c.probe.fraction}};
  const auto& s = c.training;
  j["training"] = {{"epochs", s.epochs},
                   {"batch_size", s.batch_size},
                   {"learning_rate", s.learning_rate},
                   {"lr_decay_factor", s.lr_decay_factor},
                   {"lr_decay_start", s.lr_decay_start},
                   {"lr_decay_interval", s.lr_decay_interval},
                   {"momentum", s.momentum},
                   {"weight_decay", s.weight_decay},
                   {"flip_probability", s.flip_probability}};
  json modes = json::array();
  for (auto m : c.baseline.train) modes.push_back(std::string(to_string(m)));
  j["baseline"] = {{"network", c.baseline.network}, {"shrink", c.baseline.shrink}, {"train", modes}};
  return j.dump(2) + "\n";
}

void validate(const RunConfig& c) {
  static const std::set<std::string> kinds{"seven-segment", "cifar10", "cifar100", "idx"};
  if (!kinds.contains(c.dataset.kind))
    throw ConfigError("dataset.kind", "must be one of seven-segment, cifar10, cifar100, idx");
  if ((c.dataset.kind == "cifar10" || c.dataset.kind == "cifar100") && c.dataset.path.empty())
    throw ConfigError("dataset.path", "is required for CIFAR data");
  if (c.dataset.kind == "idx" &&
      (c.dataset.train_images.empty() || c.dataset.train_labels.empty() || c.dataset.test_images.empty() ||
       c.dataset.test_labels.empty()))
    throw ConfigError("dataset", "idx data needs train_images, train_labels, test_images and test_labels");
  at_least<std::size_t>("dataset.num_classes", c.dataset.num_classes, 2);
  if (c.dataset.kind == "seven-segment") {
    at_least<std::size_t>("dataset.train_per_class", c.dataset.synthetic.train_per_class, 1);
    at_least<std::size_t>("dataset.test_per_class", c.dataset.synthetic.test_per_class, 1);
  }
  if (c.preprocess.zca && !(c.preprocess.zca_regularization > 0))
    throw ConfigError("preprocess.zca_regularization", "must be positive");

  if (c.initial.size() < 2) throw ConfigError("classes.initial", "the root needs at least two groups");
  std::set<ClassLabel> seen;
  const auto check = [&](const std::vector<std::vector<ClassLabel>>& groups, const std::string& field) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto f = field + "[" + std::to_string(g) + "]";
      if (field == "classes.initial" && groups[g].empty()) throw ConfigError(f, "is empty");
      for (auto label : groups[g]) {
        if (label < 0 || static_cast<std::size_t>(label) >= c.dataset.num_classes)
          throw ConfigError(f, "class " + std::to_string(label) + " is outside the dataset");
        if (!seen.insert(label).second) throw ConfigError(f, "class " + std::to_string(label) + " appears twice");
      }
    }
  };
  check(c.initial, "classes.initial");
  check(c.stages, "classes.stages");

  for (const auto* name : {&c.tree.root, &c.tree.branch, &c.baseline.network}) {
    bool known = false;
    for (auto n : specs::names()) known = known || n == *name;
    if (!known) throw ConfigError(name == &c.tree.root ? "tree.root" : name == &c.tree.branch ? "tree.branch" : "baseline.network",
                                  "unknown network '" + *name + "'");
  }
  at_least<std::size_t>("tree.shrink", c.tree.shrink, 1);
  at_least<std::size_t>("baseline.shrink", c.baseline.shrink, 1);
  at_least<std::size_t>("tree.max_children", c.tree.max_children, 2);
  at_least<std::size_t>("tree.max_depth", c.tree.max_depth, 1);
  for (std::size_t g = 0; g < c.initial.size(); ++g) {
    if (c.initial[g].size() > 1 && c.tree.max_depth < 2)
      throw ConfigError("classes.initial", "branch groups need tree.max_depth >= 2");
    if (c.initial[g].size() > c.tree.max_children)
      throw ConfigError("classes.initial[" + std::to_string(g) + "]", "exceeds tree.max_children");
  }
  try {
    validate(growth_config(c));
  } catch (const ConfigError& e) {
    throw ConfigError(e.field(), e.what());
  }
  try {
    validate(c.probe);
    validate(c.training);
  } catch (const ConfigError& e) {
    throw ConfigError(e.field(), e.what());
  }
}

NodeArchitecture node_architecture(const RunConfig& c, const Shape& input) {
  auto root = specs::by_name(c.tree.root, 2, input);
  auto branch = specs::by_name(c.tree.branch, 2, input);
  if (c.tree.shrink > 1) {
    root = shrink(root, c.tree.shrink);
    branch = shrink(branch, c.tree.shrink);
  }
  return {root, branch, derive_seed(c.seed, "init")};
}

NetworkSpec baseline_spec(const RunConfig& c, std::size_t classes, const Shape& input) {
  auto spec = specs::by_name(c.baseline.network, classes, input);
  if (c.baseline.shrink > 1) spec = with_outputs(shrink(spec, c.baseline.shrink), classes);
  return spec;
}

TreeLimits tree_limits(const RunConfig& c) { return {c.tree.max_children, c.tree.max_depth}; }

GrowthConfig growth_config(const RunConfig& c) {
  GrowthConfig g;
  g.alpha = c.alpha;
  g.beta = c.beta;
  g.max_children = c.tree.max_children;
  g.max_depth = c.tree.max_depth;
  g.seed = derive_seed(c.seed, "merge-tiebreak");
  return g;
}

TrainingSchedule training_schedule(const RunConfig& c) {
  auto s = c.training;
  s.seed = derive_seed(c.seed, "augment");
  return s;
}

DatasetPair load_dataset(const DatasetConfig& d) {
  DatasetPair pair;
  if (d.kind == "seven-segment") {
    pair = make_seven_segment(d.synthetic);
  } else if (d.kind == "cifar10") {
    pair = load_cifar_dir(d.path, CifarVariant::cifar10);
  } else if (d.kind == "cifar100") {
    pair = load_cifar_dir(d.path, CifarVariant::cifar100);
  } else if (d.kind == "idx") {
    pair.train = load_idx(d.train_images, d.train_labels, SplitTag::train, d.num_classes);
    pair.test = load_idx(d.test_images, d.test_labels, SplitTag::test, d.num_classes);
  } else {
    throw ConfigError("dataset.kind", "unknown dataset kind '" + d.kind + "'");
  }
  if (d.downsample) {
    pair.train = downsample_2x(pair.train);
    pair.test = downsample_2x(pair.test);
  }
  return pair;
}

}  // namespace treecnn::bench
