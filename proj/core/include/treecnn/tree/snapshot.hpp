#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "treecnn/tree/tree.hpp"

namespace treecnn {

// Topology as JSON: limits, node architecture, and per node its parent,
// children, leaf class, label transform, and classifier spec hash/checksum.
// Weights are stored separately (one checkpoint per node).
std::string tree_snapshot(const Tree& tree);

// Supplies the trained classifier of a node; `spec` is the shape the snapshot
// expects. When no loader is given, classifiers are freshly initialized
// (structure-only restore, e.g. for verification).
using WeightLoader = std::function<Network(NodeId id, const NetworkSpec& spec)>;

// Throws FormatError on malformed JSON, and when a loaded classifier's
// checksum differs from the snapshot.
Tree tree_from_snapshot(std::string_view text, const WeightLoader& loader = nullptr);

// Graphviz rendering. Nodes carry class="root"|"branch"|"leaf"; full branches
// are filled yellow with a double border, other branches light blue, leaves
// green. Leaves are labelled with `class_names` when given.
std::string to_dot(const Tree& tree, std::span<const std::string> class_names = {});

}  // namespace treecnn
