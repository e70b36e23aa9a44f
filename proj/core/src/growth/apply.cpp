#include "treecnn/growth/apply.hpp"

#include "treecnn/common/error.hpp"

namespace treecnn {

std::vector<ChildSummary> summarize_children(const Tree& tree, NodeId node) {
  std::vector<ChildSummary> out;
  const auto& lim = tree.limits();
  for (auto c : tree.node(node).children) {
    const auto& n = tree.node(c);
    ChildSummary s;
    s.id = c;
    s.is_leaf = n.is_leaf();
    s.child_count = n.children.size();
    s.can_deepen = lim.max_depth == 0 || tree.depth(c) + 1 <= lim.max_depth;
    out.push_back(s);
  }
  return out;
}

void apply_plan(Tree& tree, const PlacementPlan& plan) {
  for (const auto& a : plan.actions) {
    switch (a.kind) {
      case PlacementKind::add_to_child:
        tree.add_class_to_node(a.label, a.target);
        break;
      case PlacementKind::merge_then_add:
        tree.merge_nodes(a.target, a.absorbed, plan.node);
        tree.add_class_to_node(a.label, a.target);
        break;
      case PlacementKind::new_leaf:
        if (a.target != plan.node) throw TreeError("new-leaf action must target the grown node");
        tree.add_new_node(a.label, plan.node);
        break;
    }
  }
}

GrowthConfig growth_config_for(const Tree& tree, GrowthConfig base) {
  const auto& lim = tree.limits();
  base.max_children = lim.max_children ? lim.max_children : static_cast<std::size_t>(-1);
  base.max_depth = lim.max_depth ? lim.max_depth : static_cast<std::size_t>(-1);
  return base;
}

}  // namespace treecnn
