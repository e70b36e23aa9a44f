#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treecnn/bench/config.hpp"
#include "treecnn/train/report.hpp"

namespace treecnn::bench {

// Layout of a run directory:
//   manifest.json
//   stages/NNN/{report.json, topology.dot, tree.snapshot}
//   checkpoints/<node-id>.bin
//   baseline/<mode>/NNN/report.json, checkpoints/baseline-<mode>.bin
// where <mode> is "initial" for the shared first stage or e.g. "B-III".
namespace layout {
std::filesystem::path manifest(const std::filesystem::path& run);
std::filesystem::path stage_dir(const std::filesystem::path& run, std::size_t stage);
std::string stage_report(std::size_t stage);  // relative to the run
std::string stage_snapshot(std::size_t stage);
std::string stage_dot(std::size_t stage);
std::string node_checkpoint(NodeId node);
std::string baseline_dir_name(std::optional<FineTuneMode> mode);  // nullopt: initial
std::string baseline_report(std::optional<FineTuneMode> mode, std::size_t stage);
std::string baseline_checkpoint(std::optional<FineTuneMode> mode);
}  // namespace layout

struct StageEntry {
  std::size_t index = 0;
  std::string report;
  std::uint64_t effort = 0;
  double accuracy = 0.0;

  friend bool operator==(const StageEntry&, const StageEntry&) = default;
};

struct Manifest {
  std::string run_id;
  RunConfig config;
  Shape image_shape;
  std::map<ClassLabel, std::size_t> train_counts;  // classes used by the run
  std::map<ClassLabel, std::size_t> test_counts;
  std::vector<std::string> class_names;  // indexed by class id
  std::uint64_t effort_reference = 0;     // B:V of the final stage
  std::vector<StageEntry> stages;
  std::map<std::string, std::vector<StageEntry>> baseline;  // keyed by directory name

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

std::string manifest_to_text(const Manifest& manifest);
Manifest manifest_from_text(std::string_view text);
Manifest read_manifest(const std::filesystem::path& run);
// Atomic replace.
void write_manifest(const std::filesystem::path& run, const Manifest& manifest);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// One stage's output. Checkpoints are staged next to their final names and
// only moved into place once the report, the commit point, is on disk.
struct StageCommit {
  std::string report;                          // relative path
  std::string report_text;
  std::map<std::string, std::string> files;    // other stage artifacts
  std::map<std::string, std::string> checkpoints;  // relative path -> bytes
};

void commit_stage(const std::filesystem::path& run, const StageCommit& commit);

// Finishes or rolls back a commit interrupted part way. Returns the number of
// commits repaired.
std::size_t recover_run(const std::filesystem::path& run);

}  // namespace treecnn::bench
