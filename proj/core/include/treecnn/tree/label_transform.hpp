#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "treecnn/common/types.hpp"

namespace treecnn {

// Per-node lookup from dataset class label to the output neuron (child index)
// whose subtree holds that class.
class LabelTransform {
 public:
  std::optional<std::size_t> find(ClassLabel label) const;
  // Throws TreeError for an unknown class.
  std::size_t at(ClassLabel label) const;
  bool contains(ClassLabel label) const { return map_.contains(label); }

  void assign(ClassLabel label, std::size_t child);
  void erase(ClassLabel label);
  // Drops every class routed to `child` and shifts higher indices down by one.
  void remove_child(std::size_t child);

  std::vector<ClassLabel> classes() const;
  std::vector<ClassLabel> classes_of(std::size_t child) const;
  std::size_t size() const noexcept { return map_.size(); }
  const std::map<ClassLabel, std::size_t>& entries() const noexcept { return map_; }

  friend bool operator==(const LabelTransform&, const LabelTransform&) = default;

 private:
  std::map<ClassLabel, std::size_t> map_;
};

}  // namespace treecnn
