#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treecnn/common/types.hpp"
#include "treecnn/data/dataset.hpp"
#include "treecnn/data/feature_set.hpp"

namespace treecnn {

// Ordered class groups; group t is introduced at stage t (group 0 is the
// initial training set).
struct ClassSchedule {
  std::vector<std::vector<ClassLabel>> groups;

  std::size_t stages() const noexcept { return groups.size(); }
  // Classes of groups 0..t in schedule order.
  std::vector<ClassLabel> classes_through(std::size_t t) const;
  std::vector<ClassLabel> all_classes() const;

  friend bool operator==(const ClassSchedule&, const ClassSchedule&) = default;
};

// Groups must be non-empty and pairwise disjoint, labels within
// [0, num_classes) when given.
void validate(const ClassSchedule& schedule, std::optional<std::size_t> num_classes = std::nullopt);

// Line format, one group per line, '#' starts a comment:
//   0: chair, bridge, girl
//   1: 43, 46, 56
// Group indices must run 0, 1, 2, ... Entries are class ids or names from
// `class_names` (case-insensitive, spaces read as underscores).
ClassSchedule parse_schedule(std::string_view text, std::span<const std::string> class_names = {});
ClassSchedule load_schedule(const std::filesystem::path& path, std::span<const std::string> class_names = {});
std::string to_text(const ClassSchedule& schedule, std::span<const std::string> class_names = {});

template <typename Set>
struct StageSlices {
  Set cumulative;  // all classes of groups 0..t
  Set added;       // classes of group t only
};

StageSlices<DatasetSplit> stage_slices(const DatasetSplit& split, const ClassSchedule& schedule, std::size_t t);
StageSlices<FeatureSet> stage_slices(const FeatureSet& set, const ClassSchedule& schedule, std::size_t t);

}  // namespace treecnn
