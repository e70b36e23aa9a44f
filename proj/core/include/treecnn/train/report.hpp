#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treecnn/common/types.hpp"
#include "treecnn/growth/growth.hpp"

namespace treecnn {

struct ClassAccuracy {
  ClassLabel label = 0;
  std::size_t correct = 0;
  std::size_t total = 0;

  friend bool operator==(const ClassAccuracy&, const ClassAccuracy&) = default;
};

struct AccuracyResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<ClassAccuracy> per_class;  // ascending label

  // Percentage in [0, 100]; 0 for an empty set.
  double percent() const;
  // Percentage over the given classes only.
  double percent_over(std::span<const ClassLabel> classes) const;

  friend bool operator==(const AccuracyResult&, const AccuracyResult&) = default;
};

struct RetrainRecord {
  NodeId node = kNoNode;  // kNoNode for a baseline network
  std::string role;       // root, branch or baseline
  bool fresh = false;     // weights were newly initialized this stage
  std::size_t outputs = 0;
  std::uint64_t weights = 0;
  std::uint64_t samples = 0;

  friend bool operator==(const RetrainRecord&, const RetrainRecord&) = default;
};

struct TopologySummary {
  std::size_t nodes = 0;
  std::size_t branches = 0;  // non-root, non-leaf
  std::size_t leaves = 0;
  std::size_t depth = 0;
  std::uint64_t weights = 0;  // over every classifier

  friend bool operator==(const TopologySummary&, const TopologySummary&) = default;
};

struct StageReport {
  std::size_t stage = 0;
  std::string model;  // "tree" or a fine-tune mode such as "B:III"
  std::vector<ClassLabel> new_classes;
  std::vector<ClassLabel> classes;  // everything learned so far
  std::vector<PlacementPlan> plans;  // root plan first, then deeper ones
  std::vector<RetrainRecord> retrained;
  std::uint64_t effort = 0;
  std::uint64_t effort_reference = 0;  // 0 when not normalized
  AccuracyResult accuracy;
  std::optional<TopologySummary> topology;
  std::string snapshot;  // relative path of the tree snapshot, if any

  std::optional<double> normalized_effort() const;

  friend bool operator==(const StageReport&, const StageReport&) = default;
};

std::string report_to_text(const StageReport& report);
StageReport report_from_text(std::string_view text);

}  // namespace treecnn
