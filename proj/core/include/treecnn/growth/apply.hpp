#pragma once

#include <vector>

#include "treecnn/growth/growth.hpp"
#include "treecnn/tree/tree.hpp"

namespace treecnn {

// Children of `node` as grow() sees them, honouring the tree's limits.
std::vector<ChildSummary> summarize_children(const Tree& tree, NodeId node);

// Replays a plan on the tree it was computed for.
void apply_plan(Tree& tree, const PlacementPlan& plan);

// The tree's capacity limits expressed as a growth config (thresholds and
// seed from `base`).
GrowthConfig growth_config_for(const Tree& tree, GrowthConfig base);

}  // namespace treecnn
