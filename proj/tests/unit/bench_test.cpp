#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include "json.hpp"
#include "treecnn/bench/config.hpp"
#include "treecnn/bench/run.hpp"
#include "treecnn/bench/run_dir.hpp"
#include "treecnn/bench/tables.hpp"
#include "treecnn/common/error.hpp"

namespace fs = std::filesystem;
using namespace treecnn;
using namespace treecnn::bench;
using json = nlohmann::ordered_json;

namespace {

const char* kTinyConfig = R"({
  "name": "tiny",
  "seed": 3,
  "dataset": {"kind": "seven-segment", "train_per_class": 12, "test_per_class": 6, "seed": 2},
  "preprocess": {"gcn": true, "zca": false},
  "classes": {"initial": [["0", "1"], ["2", "3"]], "stages": [["4", "5"], ["6"]]},
  "tree": {"root": "desk-node", "branch": "desk-node", "max_children": 3, "max_depth": 2},
  "growth": {"alpha": 0.1, "beta": 0.1},
  "probe": {"per_class": 4},
  "training": {"epochs": 1, "batch_size": 16, "learning_rate": 0.05, "momentum": 0.9, "flip_probability": 0},
  "baseline": {"network": "desk-network-b", "train": ["B:I", "B:III"]}
})";

RunConfig tiny() { return parse_run_config(kTinyConfig, {}); }

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("treecnn-bench-" + std::to_string(::getpid()) + "-" + name);
  fs::remove_all(dir);
  return dir;
}

std::string field_of(const std::string& text) {
  try {
    parse_run_config(text, {});
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

std::string edit(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return text.replace(at, from.size(), to);
}

bool all_pass(const std::vector<Check>& checks) {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return !checks.empty();
}

bool failed(const std::vector<Check>& checks, const std::string& name_part) {
  for (const auto& c : checks)
    if (!c.passed && c.name.find(name_part) != std::string::npos) return true;
  return false;
}

// Full run shared by the report and verify tests.
const fs::path& full_run() {
  static const fs::path dir = [] {
    auto d = scratch("full");
    run_experiment(tiny(), d);
    return d;
  }();
  return dir;
}

}  // namespace

TEST(Config, ErrorsNameTheField) {
  const std::string base = kTinyConfig;
  EXPECT_EQ(field_of(edit(base, "\"max_depth\"", "\"max_dept\"")), "tree.max_dept");
  EXPECT_EQ(field_of(edit(base, "\"epochs\": 1", "\"epochs\": \"one\"")), "training.epochs");
  EXPECT_EQ(field_of(edit(base, "[\"6\"]", "[\"sixty\"]")), "classes.stages[1]");
  EXPECT_EQ(field_of(edit(base, "\"B:III\"", "\"B:VI\"")), "baseline.train");
  EXPECT_EQ(field_of(edit(base, "\"seven-segment\"", "\"mnist\"")), "dataset.kind");
  EXPECT_EQ(field_of("[1, 2]"), "config");
  EXPECT_EQ(field_of("{"), "config");
}

TEST(Config, CanonicalTextRoundTrips) {
  const auto c = tiny();
  EXPECT_EQ(c.initial, (std::vector<std::vector<ClassLabel>>{{0, 1}, {2, 3}}));
  EXPECT_EQ(c.stages, (std::vector<std::vector<ClassLabel>>{{4, 5}, {6}}));
  const auto text = to_text(c);
  EXPECT_EQ(to_text(parse_run_config(text, {})), text);
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& e : fs::directory_iterator(fs::path(TREECNN_SOURCE_DIR) / "configs")) {
    SCOPED_TRACE(e.path().string());
    const auto c = load_run_config(e.path());
    if (c.dataset.kind == "cifar100") {
      EXPECT_EQ(c.initial.size(), 10u);
      EXPECT_EQ(c.stages.size(), 9u);
    }
  }
}

TEST(Run, StopAndResumeReproducesAFullRun) {
  const auto& whole = full_run();
  const auto part = scratch("resume");
  const auto first = run_experiment(tiny(), part, {.stop_after = 1});
  EXPECT_EQ(first.stages_run, 1u);
  EXPECT_FALSE(fs::exists(part / layout::stage_report(1)));

  const auto second = run_experiment(tiny(), part);
  EXPECT_EQ(second.stages_resumed, 1u);
  EXPECT_EQ(second.stages_run, 2u);
  for (std::size_t t = 0; t <= 2; ++t) {
    EXPECT_EQ(read_file(part / layout::stage_report(t)), read_file(whole / layout::stage_report(t))) << t;
    EXPECT_EQ(read_file(part / layout::stage_snapshot(t)), read_file(whole / layout::stage_snapshot(t))) << t;
  }
  EXPECT_EQ(read_file(part / layout::baseline_report(FineTuneMode::b3, 2)),
            read_file(whole / layout::baseline_report(FineTuneMode::b3, 2)));
  EXPECT_EQ(read_manifest(part), read_manifest(whole));
}

TEST(Run, RefusesADifferentConfig) {
  const auto dir = scratch("refuse");
  run_experiment(tiny(), dir, {.stop_after = 1});
  auto other = tiny();
  other.alpha = 0.2;
  EXPECT_THROW(run_experiment(other, dir), ConfigError);
}

TEST(Run, InterruptedCommitIsRolledBackOrFinished) {
  const auto& whole = full_run();
  const auto dir = scratch("crash");
  run_experiment(tiny(), dir, {.stop_after = 1});
  const auto root_ckpt = layout::node_checkpoint(0);
  const auto good = read_file(dir / root_ckpt);

  // died before the report: staged checkpoints and a partial stage directory
  const auto marker = dir / "checkpoints" / "stages" / "001.pending";
  fs::create_directories(marker.parent_path());
  write_file_atomic(marker, json{{"report", layout::stage_report(1)}, {"checkpoints", {root_ckpt}}}.dump());
  write_file_atomic(dir / (root_ckpt + ".next"), "half written");
  write_file_atomic(dir / layout::stage_snapshot(1), "{");
  EXPECT_EQ(recover_run(dir), 1u);
  EXPECT_FALSE(fs::exists(marker));
  EXPECT_FALSE(fs::exists(dir / (root_ckpt + ".next")));
  EXPECT_FALSE(fs::exists(layout::stage_dir(dir, 1)));
  EXPECT_EQ(read_file(dir / root_ckpt), good);

  // died after the report: the staged checkpoint must land
  write_file_atomic(marker, json{{"report", layout::stage_report(0)}, {"checkpoints", {root_ckpt}}}.dump());
  write_file_atomic(dir / (root_ckpt + ".next"), good);
  fs::remove(dir / root_ckpt);
  EXPECT_EQ(recover_run(dir), 1u);
  EXPECT_EQ(read_file(dir / root_ckpt), good);

  // a crash before the report, left for run_experiment to clean up
  write_file_atomic(marker, json{{"report", layout::stage_report(1)}, {"checkpoints", {root_ckpt}}}.dump());
  write_file_atomic(dir / (root_ckpt + ".next"), "garbage");
  run_experiment(tiny(), dir);
  for (std::size_t t = 0; t <= 2; ++t)
    EXPECT_EQ(read_file(dir / layout::stage_report(t)), read_file(whole / layout::stage_report(t))) << t;
  EXPECT_TRUE(all_pass(verify_run(dir)));
}

TEST(Report, TablesHaveOneRowPerStage) {
  const auto& dir = full_run();
  const auto out = scratch("report");
  const auto written = write_report(dir, out);
  EXPECT_EQ(written.size(), 8u);  // 5 tables and 3 DOT files

  const auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
  const auto effort = effort_csv(dir);
  EXPECT_EQ(effort.substr(0, effort.find('\n')), "stage,classes,B:I,B:II,B:III,B:IV,B:V,Tree-CNN-3");
  EXPECT_EQ(lines(effort), 4);
  EXPECT_EQ(lines(accuracy_csv(dir)), 4);
  EXPECT_EQ(accuracy_csv(dir).substr(0, accuracy_csv(dir).find('\n')), "stage,classes,Tree-CNN-3,B:I,B:III");
  EXPECT_EQ(lines(per_class_csv(dir)), 1 + 4 + 6 + 7);
  // the last row of the simulated B:V column is the reference
  EXPECT_NE(effort.find("\n2,7,"), std::string::npos);
  EXPECT_NE(effort.rfind(",1.0000,"), std::string::npos);
}

TEST(Report, StopsOnAnIncompleteRun) {
  const auto dir = scratch("incomplete");
  run_experiment(tiny(), dir, {.stop_after = 2});
  fs::remove(dir / layout::stage_snapshot(1));
  EXPECT_THROW(write_report(dir, scratch("incomplete-out")), FormatError);
}

TEST(Verify, PristineRunPasses) {
  const auto checks = verify_run(full_run());
  for (const auto& c : checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  EXPECT_TRUE(all_pass(checks));
}

TEST(Verify, TamperedEffortFails) {
  const auto dir = scratch("tamper-effort");
  fs::copy(full_run(), dir, fs::copy_options::recursive);
  auto m = read_manifest(dir);
  m.stages[1].effort += 1;
  write_manifest(dir, m);
  EXPECT_TRUE(failed(verify_run(dir), "stage 1 effort"));
}

TEST(Verify, DuplicatedLeafClassFails) {
  const auto dir = scratch("tamper-leaf");
  fs::copy(full_run(), dir, fs::copy_options::recursive);
  auto snap = json::parse(read_file(dir / layout::stage_snapshot(2)));
  std::optional<ClassLabel> first;
  for (auto& n : snap["nodes"]) {
    if (n["leaf_class"].is_null()) continue;
    if (!first) {
      first = n["leaf_class"].get<ClassLabel>();
    } else {
      n["leaf_class"] = *first;
      break;
    }
  }
  write_file_atomic(dir / layout::stage_snapshot(2), snap.dump(2));
  const auto checks = verify_run(dir);
  EXPECT_FALSE(all_pass(checks));
  EXPECT_TRUE(failed(checks, "stage 2"));
}
