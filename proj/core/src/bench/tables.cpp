#include "treecnn/bench/tables.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "treecnn/bench/run.hpp"
#include "treecnn/common/error.hpp"
#include "treecnn/nn/checkpoint.hpp"
#include "treecnn/nn/specs.hpp"
#include "treecnn/train/effort.hpp"
#include "treecnn/tree/snapshot.hpp"

namespace treecnn::bench {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct RunView {
  Manifest manifest;
  std::vector<StageReport> reports;
  std::map<std::string, std::vector<StageReport>> baseline;
};

RunView load_view(const fs::path& run) {
  RunView v{read_manifest(run), {}, {}};
  std::vector<std::string> missing;
  const auto need = [&](const std::string& rel) {
    if (!fs::exists(run / rel)) missing.push_back(rel);
  };
  for (const auto& e : v.manifest.stages) {
    need(e.report);
    need(layout::stage_snapshot(e.index));
    need(layout::stage_dot(e.index));
  }
  for (const auto& [k, entries] : v.manifest.baseline)
    for (const auto& e : entries) need(e.report);
  if (!missing.empty()) {
    std::string msg = "run " + run.string() + " is missing:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw FormatError(msg);
  }
  for (const auto& e : v.manifest.stages) v.reports.push_back(report_from_text(read_file(run / e.report)));
  for (const auto& [k, entries] : v.manifest.baseline)
    for (const auto& e : entries) v.baseline[k].push_back(report_from_text(read_file(run / e.report)));
  return v;
}

std::uint64_t samples_of(const Manifest& m, std::span<const ClassLabel> classes) {
  std::uint64_t n = 0;
  for (auto c : classes)
    if (const auto it = m.train_counts.find(c); it != m.train_counts.end()) n += it->second;
  return n;
}

// Simulated baseline efforts for a stage that knows `classes`.
std::array<std::uint64_t, 5> baseline_efforts(const Manifest& m, std::span<const ClassLabel> classes) {
  const auto spec = baseline_spec(m.config, classes.size(), m.image_shape);
  const auto samples = samples_of(m, classes);
  std::array<std::uint64_t, 5> out{};
  for (std::size_t i = 0; i < 5; ++i) {
    const EffortTerm term{fine_tune_weights(spec, kFineTuneModes[i]), samples};
    out[i] = training_effort(std::span(&term, 1));
  }
  return out;
}

std::string tree_column(const Manifest& m) { return "Tree-CNN-" + std::to_string(m.config.tree.max_children); }

std::string effort_table(const fs::path& run, bool normalized) {
  const auto v = load_view(run);
  std::ostringstream out;
  out << "stage,classes,B:I,B:II,B:III,B:IV,B:V," << tree_column(v.manifest) << "\n";
  for (const auto& r : v.reports) {
    const auto b = baseline_efforts(v.manifest, r.classes);
    out << r.stage << "," << r.classes.size();
    for (auto e : b) out << "," << (normalized ? fixed(normalize_effort(e, v.manifest.effort_reference)) : std::to_string(e));
    out << "," << (normalized ? fixed(normalize_effort(r.effort, v.manifest.effort_reference)) : std::to_string(r.effort))
        << "\n";
  }
  return out.str();
}

}  // namespace

std::string effort_csv(const fs::path& run) { return effort_table(run, true); }
std::string effort_raw_csv(const fs::path& run) { return effort_table(run, false); }

std::string accuracy_csv(const fs::path& run) {
  const auto v = load_view(run);
  std::vector<std::string> modes;
  for (auto m : v.manifest.config.baseline.train) modes.push_back(layout::baseline_dir_name(m));
  std::ostringstream out;
  out << "stage,classes," << tree_column(v.manifest);
  for (auto m : v.manifest.config.baseline.train) out << "," << to_string(m);
  out << "\n";
  for (const auto& r : v.reports) {
    out << r.stage << "," << r.classes.size() << "," << fixed(r.accuracy.percent(), 2);
    for (const auto& key : modes) {
      const auto& list = r.stage == 0 ? v.baseline.count("initial") ? v.baseline.at("initial") : std::vector<StageReport>{}
                                      : v.baseline.count(key) ? v.baseline.at(key) : std::vector<StageReport>{};
      std::string cell;
      for (const auto& b : list)
        if (b.stage == r.stage) cell = fixed(b.accuracy.percent(), 2);
      out << "," << cell;
    }
    out << "\n";
  }
  return out.str();
}

std::string per_class_csv(const fs::path& run) {
  const auto v = load_view(run);
  std::ostringstream out;
  out << "stage,class,name,correct,total,percent\n";
  for (const auto& r : v.reports)
    for (const auto& c : r.accuracy.per_class) {
      const auto idx = static_cast<std::size_t>(c.label);
      const auto name = idx < v.manifest.class_names.size() ? v.manifest.class_names[idx] : std::to_string(c.label);
      out << r.stage << "," << c.label << "," << name << "," << c.correct << "," << c.total << ","
          << fixed(c.total ? 100.0 * static_cast<double>(c.correct) / static_cast<double>(c.total) : 0.0, 2) << "\n";
    }
  return out.str();
}

std::string topology_csv(const fs::path& run) {
  const auto v = load_view(run);
  std::ostringstream out;
  out << "stage,nodes,branches,leaves,depth,weights,retrained\n";
  for (const auto& r : v.reports) {
    const auto t = r.topology.value_or(TopologySummary{});
    out << r.stage << "," << t.nodes << "," << t.branches << "," << t.leaves << "," << t.depth << "," << t.weights
        << "," << r.retrained.size() << "\n";
  }
  return out.str();
}

std::vector<fs::path> write_report(const fs::path& run, fs::path out) {
  if (out.empty()) out = run / "report";
  const auto v = load_view(run);
  std::vector<fs::path> written;
  const auto put = [&](const fs::path& p, const std::string& text) {
    write_file_atomic(p, text);
    written.push_back(p);
  };
  put(out / "effort.csv", effort_csv(run));
  put(out / "effort_raw.csv", effort_raw_csv(run));
  put(out / "accuracy.csv", accuracy_csv(run));
  put(out / "per_class.csv", per_class_csv(run));
  put(out / "topology.csv", topology_csv(run));
  for (const auto& e : v.manifest.stages) {
    char name[32];
    std::snprintf(name, sizeof name, "topology-%03zu.dot", e.index);
    put(out / name, read_file(run / layout::stage_dot(e.index)));
  }
  return written;
}

std::string analytic_effort_csv(const std::string& network, const std::vector<std::size_t>& class_counts,
                                std::size_t samples_per_class, std::optional<std::size_t> reference_classes,
                                std::optional<Shape> input) {
  const auto spec_for = [&](std::size_t n) { return specs::by_name(network, n, input); };
  std::optional<std::uint64_t> reference;
  if (reference_classes) {
    const EffortTerm t{count_weights(spec_for(*reference_classes)), *reference_classes * samples_per_class};
    reference = training_effort(std::span(&t, 1));
  }
  const auto table = baseline_effort_table(spec_for, class_counts, samples_per_class, reference);
  std::ostringstream out;
  out << "classes,B:I,B:II,B:III,B:IV,B:V\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out << table.rows[r].classes;
    for (auto m : kFineTuneModes) out << "," << fixed(table.normalized(r, m));
    out << "\n";
  }
  return out.str();
}

std::vector<Check> verify_run(const fs::path& run) {
  std::vector<Check> checks;
  const auto add = [&](std::string name, bool ok, std::string detail = {}) {
    checks.push_back({std::move(name), ok, std::move(detail)});
  };

  Manifest m;
  try {
    m = read_manifest(run);
    add("manifest", true, m.run_id);
  } catch (const Error& e) {
    add("manifest", false, e.what());
    return checks;
  }

  const auto run_classes = classes_through(m.config, m.config.stages.size());
  {
    const auto spec = baseline_spec(m.config, run_classes.size(), m.image_shape);
    const EffortTerm t{count_weights(spec), samples_of(m, run_classes)};
    const auto expected = training_effort(std::span(&t, 1));
    add("effort reference", expected == m.effort_reference,
        "B:V at " + std::to_string(run_classes.size()) + " classes = " + std::to_string(expected));
  }

  const auto node_samples = [&](const Tree& tree, NodeId id) {
    std::vector<ClassLabel> classes;
    for (const auto& [c, i] : tree.node(id).labels.entries()) classes.push_back(c);
    return samples_of(m, classes);
  };

  for (const auto& e : m.stages) {
    const auto prefix = "stage " + std::to_string(e.index) + " ";
    StageReport r;
    std::optional<Tree> tree;
    try {
      r = report_from_text(read_file(run / e.report));
      tree = tree_from_snapshot(read_file(run / layout::stage_snapshot(e.index)));
      add(prefix + "artifacts", fs::exists(run / layout::stage_dot(e.index)), e.report);
    } catch (const Error& err) {
      add(prefix + "artifacts", false, err.what());
      continue;
    }

    const auto problems = validate_tree(*tree);
    add(prefix + "tree invariants", problems.empty(), problems.empty() ? "" : problems.front());

    std::string route_problem;
    const auto expected = classes_through(m.config, e.index);
    std::vector<ClassLabel> sorted = expected;
    std::sort(sorted.begin(), sorted.end());
    if (tree->classes() != sorted || r.classes != sorted) route_problem = "leaf classes differ from the schedule";
    for (auto c : sorted) {
      if (!route_problem.empty()) break;
      try {
        const auto path = tree->resolve(c);
        if (path.front() != tree->root()) route_problem = "class " + std::to_string(c) + " does not start at the root";
      } catch (const Error& err) {
        route_problem = err.what();
      }
    }
    add(prefix + "label transforms", route_problem.empty(), route_problem);

    std::string arithmetic;
    std::vector<EffortTerm> terms;
    for (const auto& rec : r.retrained) {
      if (!tree->contains(rec.node) || !tree->node(rec.node).classifier) {
        arithmetic = "retrained node " + std::to_string(rec.node) + " is not a classifier";
        break;
      }
      const auto weights = count_weights(tree->node(rec.node).classifier->spec());
      const auto samples = node_samples(*tree, rec.node);
      if (weights != rec.weights || samples != rec.samples)
        arithmetic = "node " + std::to_string(rec.node) + " should count " + std::to_string(weights) + " weights x " +
                     std::to_string(samples) + " samples";
      terms.push_back({rec.weights, rec.samples});
    }
    const auto total = training_effort(terms);
    if (arithmetic.empty() && total != r.effort) arithmetic = "report effort " + std::to_string(r.effort) + " != " + std::to_string(total);
    if (arithmetic.empty() && e.effort != r.effort)
      arithmetic = "manifest effort " + std::to_string(e.effort) + " != report effort " + std::to_string(r.effort);
    if (arithmetic.empty() && r.effort_reference != m.effort_reference) arithmetic = "report uses another reference";
    if (arithmetic.empty() && e.accuracy != r.accuracy.percent()) arithmetic = "manifest accuracy differs from the report";
    add(prefix + "effort arithmetic", arithmetic.empty(), arithmetic.empty() ? std::to_string(total) : arithmetic);
  }

  if (!m.stages.empty()) {
    const auto t = m.stages.back().index;
    try {
      const auto loader = [&](NodeId id, const NetworkSpec& spec) {
        std::istringstream in(read_file(run / layout::node_checkpoint(id)));
        return read_checkpoint(spec, in);
      };
      tree_from_snapshot(read_file(run / layout::stage_snapshot(t)), loader);
      add("checkpoints match stage " + std::to_string(t), true);
    } catch (const Error& err) {
      add("checkpoints match stage " + std::to_string(t), false, err.what());
    }
  }

  for (const auto& [key, entries] : m.baseline) {
    // the shared first stage trains every layer
    const auto mode = key == "initial" ? FineTuneMode::b5 : fine_tune_mode_from_string("B:" + key.substr(2));
    for (const auto& e : entries) {
      const auto name = "baseline " + key + " stage " + std::to_string(e.index) + " effort arithmetic";
      try {
        const auto r = report_from_text(read_file(run / e.report));
        const auto classes = classes_through(m.config, e.index);
        const auto spec = baseline_spec(m.config, classes.size(), m.image_shape);
        const EffortTerm t{fine_tune_weights(spec, mode), samples_of(m, classes)};
        const auto expected = training_effort(std::span(&t, 1));
        add(name, expected == r.effort && e.effort == r.effort, std::to_string(expected));
      } catch (const Error& err) {
        add(name, false, err.what());
      }
    }
  }
  return checks;
}

}  // namespace treecnn::bench
