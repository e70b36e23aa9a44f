#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "treecnn/bench/run_dir.hpp"

namespace treecnn::bench {

// Normalized effort per stage: simulated B:I..B:V columns and the tree.
std::string effort_csv(const std::filesystem::path& run);
// Same layout with raw weight x sample counts.
std::string effort_raw_csv(const std::filesystem::path& run);
// Overall accuracy per stage for the tree and any trained baseline modes.
std::string accuracy_csv(const std::filesystem::path& run);
std::string per_class_csv(const std::filesystem::path& run);
std::string topology_csv(const std::filesystem::path& run);

// Writes the tables above plus one DOT file per stage into `out` (default
// <run>/report) and returns the written paths. Throws FormatError listing
// every missing artifact when the run is incomplete or corrupt.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& run, std::filesystem::path out = {});

// Normalized B:I..B:V effort at each class count, from network specs alone.
std::string analytic_effort_csv(const std::string& network, const std::vector<std::size_t>& class_counts,
                                std::size_t samples_per_class, std::optional<std::size_t> reference_classes,
                                std::optional<Shape> input = std::nullopt);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Re-derives tree invariants, label-transform routes and effort arithmetic
// from the files of a run, without training.
std::vector<Check> verify_run(const std::filesystem::path& run);

}  // namespace treecnn::bench
