#include "treecnn/data/schedule.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "treecnn/common/error.hpp"

namespace treecnn {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string canonical(std::string_view s) {
  std::string out;
  for (char c : trim(s)) {
    if (c == ' ') {
      if (!out.empty() && out.back() != '_') out += '_';
    } else {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

template <typename Set>
StageSlices<Set> slices(const Set& set, const ClassSchedule& schedule, std::size_t t) {
  if (t >= schedule.stages())
    throw ConfigError("stage", "stage " + std::to_string(t) + " outside schedule of " + std::to_string(schedule.stages()));
  const auto through = schedule.classes_through(t);
  return {select_classes(set, through), select_classes(set, schedule.groups[t])};
}

}  // namespace

std::vector<ClassLabel> ClassSchedule::classes_through(std::size_t t) const {
  std::vector<ClassLabel> out;
  for (std::size_t g = 0; g <= t && g < groups.size(); ++g) out.insert(out.end(), groups[g].begin(), groups[g].end());
  return out;
}

std::vector<ClassLabel> ClassSchedule::all_classes() const {
  return groups.empty() ? std::vector<ClassLabel>{} : classes_through(groups.size() - 1);
}

void validate(const ClassSchedule& schedule, std::optional<std::size_t> num_classes) {
  std::set<ClassLabel> seen;
  for (std::size_t g = 0; g < schedule.groups.size(); ++g) {
    const std::string field = "schedule.groups[" + std::to_string(g) + "]";
    if (schedule.groups[g].empty()) throw ConfigError(field, "empty group");
    for (auto c : schedule.groups[g]) {
      if (c < 0 || (num_classes && static_cast<std::size_t>(c) >= *num_classes))
        throw ConfigError(field, "class " + std::to_string(c) + " out of range");
      if (!seen.insert(c).second) throw ConfigError(field, "class " + std::to_string(c) + " appears twice");
    }
  }
}

ClassSchedule parse_schedule(std::string_view text, std::span<const std::string> class_names) {
  ClassSchedule schedule;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string field = "schedule line " + std::to_string(line_no);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ConfigError(field, "expected '<group>: <classes>'");
    const auto index = trim(std::string_view(line).substr(0, colon));
    if (!all_digits(index) || std::stoul(index) != schedule.groups.size())
      throw ConfigError(field, "expected group index " + std::to_string(schedule.groups.size()));
    std::vector<ClassLabel> group;
    std::stringstream items(line.substr(colon + 1));
    std::string item;
    while (std::getline(items, item, ',')) {
      const auto name = canonical(item);
      if (name.empty()) throw ConfigError(field, "empty class entry");
      if (all_digits(name)) {
        group.push_back(std::stoi(name));
        continue;
      }
      const auto it = std::find_if(class_names.begin(), class_names.end(),
                                   [&](const std::string& n) { return canonical(n) == name; });
      if (it == class_names.end()) throw ConfigError(field, "unknown class '" + trim(item) + "'");
      group.push_back(static_cast<ClassLabel>(it - class_names.begin()));
    }
    schedule.groups.push_back(std::move(group));
  }
  validate(schedule, class_names.empty() ? std::nullopt : std::optional<std::size_t>(class_names.size()));
  return schedule;
}

ClassSchedule load_schedule(const std::filesystem::path& path, std::span<const std::string> class_names) {
  std::ifstream in(path);
  if (!in) throw ConfigError("schedule", path.string() + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_schedule(buf.str(), class_names);
}

std::string to_text(const ClassSchedule& schedule, std::span<const std::string> class_names) {
  std::string out;
  for (std::size_t g = 0; g < schedule.groups.size(); ++g) {
    out += std::to_string(g) + ":";
    for (std::size_t i = 0; i < schedule.groups[g].size(); ++i) {
      const auto c = schedule.groups[g][i];
      out += i == 0 ? " " : ", ";
      out += (c >= 0 && static_cast<std::size_t>(c) < class_names.size()) ? class_names[c] : std::to_string(c);
    }
    out += '\n';
  }
  return out;
}

StageSlices<DatasetSplit> stage_slices(const DatasetSplit& split, const ClassSchedule& schedule, std::size_t t) {
  return slices(split, schedule, t);
}

StageSlices<FeatureSet> stage_slices(const FeatureSet& set, const ClassSchedule& schedule, std::size_t t) {
  return slices(set, schedule, t);
}

}  // namespace treecnn
