#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "treecnn/bench/run.hpp"
#include "treecnn/bench/tables.hpp"
#include "treecnn/common/error.hpp"
#include "treecnn/data/cifar.hpp"
#include "treecnn/data/idx.hpp"
#include "treecnn/data/synthetic.hpp"
#include "treecnn/tree/snapshot.hpp"

namespace fs = std::filesystem;
using namespace treecnn;

namespace {

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
  return out;
}

const std::vector<std::string>& names_for(const std::string& set) {
  static const std::vector<std::string> none;
  if (set == "cifar10") return cifar10_class_names();
  if (set == "cifar100") return cifar100_class_names();
  if (set == "seven-segment") return seven_segment_class_names();
  return none;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incrementally grown trees of CNN classifiers"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Train the initial tree and every scheduled stage (resumes when possible)");
  std::string config_path, out_dir, data_path;
  std::optional<std::size_t> epochs, shrink_factor;
  std::optional<std::uint64_t> seed;
  bool downsample = false, restart = false, quiet = false;
  run->add_option("config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "Run directory (default runs/<name>)");
  run->add_option("--data", data_path, "Dataset directory, overriding the config");
  run->add_option("--epochs", epochs, "Epochs per node network");
  run->add_option("--shrink", shrink_factor, "Divide hidden widths of every network by this factor");
  run->add_option("--seed", seed, "Run seed");
  run->add_flag("--downsample", downsample, "Halve image resolution");
  run->add_flag("--restart", restart, "Delete an existing run directory first");
  run->add_flag("-q,--quiet", quiet, "No progress log");

  // report
  auto* report = app.add_subcommand("report", "Write effort, accuracy and topology tables for a run");
  std::string report_run, report_out;
  report->add_option("run", report_run, "Run directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("-o,--out", report_out, "Output directory (default <run>/report)");

  // verify
  auto* verify = app.add_subcommand("verify", "Re-check tree invariants and effort arithmetic of a run");
  std::string verify_run_dir;
  verify->add_option("run", verify_run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

  // effort-table
  auto* effort = app.add_subcommand("effort-table", "Baseline fine-tuning effort computed from network specs");
  std::string network = "network-b", counts = "20,30,40,50,60,70,80,90,100";
  std::size_t per_class = 500, reference_classes = 100;
  effort->add_option("--network", network, "Baseline network")->capture_default_str();
  effort->add_option("--classes", counts, "Comma-separated class counts")->capture_default_str();
  effort->add_option("--samples-per-class", per_class, "Training images per class")->capture_default_str();
  effort->add_option("--reference-classes", reference_classes, "Normalize by B:V at this class count")
      ->capture_default_str();

  // export-dot
  auto* dot = app.add_subcommand("export-dot", "Render a tree snapshot (or a run stage) as Graphviz DOT");
  std::string dot_source, dot_out, dot_names;
  std::optional<std::size_t> dot_stage;
  dot->add_option("source", dot_source, "tree.snapshot file or run directory")->required()->check(CLI::ExistingPath);
  dot->add_option("--stage", dot_stage, "Stage of a run directory (default: last)");
  dot->add_option("--names", dot_names, "Class names: cifar10, cifar100 or seven-segment");
  dot->add_option("-o,--out", dot_out, "Output file (default stdout)");

  // make-dataset
  auto* make = app.add_subcommand("make-dataset", "Write the seven-segment digit set as IDX files");
  std::string make_out;
  SevenSegmentConfig synth;
  make->add_option("out", make_out, "Output directory")->required();
  make->add_option("--train-per-class", synth.train_per_class)->capture_default_str();
  make->add_option("--test-per-class", synth.test_per_class)->capture_default_str();
  make->add_option("--seed", synth.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      auto config = bench::load_run_config(config_path);
      if (!data_path.empty()) config.dataset.path = data_path;
      if (epochs) config.training.epochs = *epochs;
      if (shrink_factor) config.tree.shrink = config.baseline.shrink = *shrink_factor;
      if (seed) config.seed = *seed;
      if (downsample) config.dataset.downsample = true;
      bench::validate(config);
      const fs::path dir = out_dir.empty() ? fs::path("runs") / config.name : fs::path(out_dir);
      if (restart) fs::remove_all(dir);
      bench::RunOptions options;
      if (!quiet) options.log = &std::cerr;
      const auto result = bench::run_experiment(config, dir, options);
      std::cout << dir.string() << ": " << result.stages_run << " stage(s) run, " << result.stages_resumed
                << " resumed\n";
      for (const auto& r : result.reports)
        std::cout << "  stage " << r.stage << ": " << r.classes.size() << " classes, accuracy " << r.accuracy.percent()
                  << "%, normalized effort " << r.normalized_effort().value_or(0.0) << "\n";
    } else if (*report) {
      for (const auto& p : bench::write_report(report_run, report_out)) std::cout << p.string() << "\n";
    } else if (*verify) {
      const auto checks = bench::verify_run(verify_run_dir);
      bool ok = true;
      for (const auto& c : checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name;
        if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
        std::cout << "\n";
        ok = ok && c.passed;
      }
      return ok ? 0 : 1;
    } else if (*effort) {
      std::cout << bench::analytic_effort_csv(network, parse_counts(counts), per_class, reference_classes);
    } else if (*dot) {
      fs::path snapshot = dot_source;
      std::vector<std::string> names = names_for(dot_names);
      if (fs::is_directory(dot_source)) {
        const auto manifest = bench::read_manifest(dot_source);
        if (manifest.stages.empty()) throw FormatError("run has no completed stage");
        const auto stage = dot_stage.value_or(manifest.stages.back().index);
        snapshot = fs::path(dot_source) / bench::layout::stage_snapshot(stage);
        if (dot_names.empty()) names = manifest.class_names;
      }
      const auto text = to_dot(tree_from_snapshot(bench::read_file(snapshot)), names);
      if (dot_out.empty()) {
        std::cout << text;
      } else {
        bench::write_file_atomic(dot_out, text);
      }
    } else if (*make) {
      const auto data = make_seven_segment(synth);
      fs::create_directories(make_out);
      const fs::path dir(make_out);
      save_idx(data.train, dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
      save_idx(data.test, dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
      std::cout << data.train.size() << " training and " << data.test.size() << " test images in " << make_out << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
