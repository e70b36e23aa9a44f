#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "treecnn/common/types.hpp"
#include "treecnn/nn/network.hpp"
#include "treecnn/tree/label_transform.hpp"

namespace treecnn {

enum class NodeKind { root, branch, leaf };

std::string_view to_string(NodeKind kind);

struct TreeNode {
  NodeId id = kNoNode;
  NodeId parent = kNoNode;
  std::vector<NodeId> children;
  std::optional<Network> classifier;  // absent iff leaf
  LabelTransform labels;              // empty iff leaf
  std::optional<ClassLabel> leaf_class;
  bool trained = false;  // classifier has been fit since it was created

  bool is_leaf() const noexcept { return children.empty(); }
};

// Capacity rules. `max_children` caps branch nodes (the root is unbounded);
// `max_depth` caps node depth with the root at depth 0. Zero means no limit.
struct TreeLimits {
  std::size_t max_children = 0;
  std::size_t max_depth = 0;

  friend bool operator==(const TreeLimits&, const TreeLimits&) = default;
};

// Network templates for node classifiers. A new classifier at depth 0 uses
// `root`, deeper ones use `branch`, both widened to the node's child count.
struct NodeArchitecture {
  NetworkSpec root;
  NetworkSpec branch;
  std::uint64_t seed = 0;

  friend bool operator==(const NodeArchitecture&, const NodeArchitecture&) = default;
};

class Tree {
 public:
  // Root whose children are `groups`: a one-class group becomes a leaf, a
  // larger group a branch over its leaves. Needs at least two groups.
  static Tree build(NodeArchitecture arch, TreeLimits limits,
                    const std::vector<std::vector<ClassLabel>>& groups);

  NodeId root() const noexcept { return root_; }
  const TreeLimits& limits() const noexcept { return limits_; }
  const NodeArchitecture& architecture() const noexcept { return arch_; }
  const std::map<NodeId, TreeNode>& nodes() const noexcept { return nodes_; }

  const TreeNode& node(NodeId id) const;
  TreeNode& node(NodeId id);
  bool contains(NodeId id) const { return nodes_.contains(id); }
  NodeKind kind(NodeId id) const;
  std::size_t depth(NodeId id) const;
  std::size_t child_index(NodeId parent, NodeId child) const;

  // True when a branch has reached max_children, or a leaf sits at max_depth
  // and so cannot become a branch. The root is never full.
  bool is_full(NodeId id) const;

  // Leaf classes in ascending label order.
  std::vector<ClassLabel> classes() const;
  std::optional<NodeId> leaf_of(ClassLabel label) const;
  bool has_class(ClassLabel label) const { return leaf_of(label).has_value(); }

  // Follows LabelTransform lookups from the root. Throws TreeError when the
  // composition does not end at the leaf holding `label`.
  std::vector<NodeId> resolve(ClassLabel label) const;

  // Appends a leaf for `label` under the non-leaf `parent`; the parent's
  // classifier gains one output.
  NodeId add_new_node(ClassLabel label, NodeId parent);

  // Places `label` under `target`, a non-root node. A leaf target becomes a
  // branch over two new leaves (old class, new class) with a fresh classifier;
  // a branch target gains a leaf.
  void add_class_to_node(ClassLabel label, NodeId target);

  // Moves the class of leaf `absorb` under sibling `keep`, then removes
  // `absorb` from `parent`, whose classifier loses that output.
  void merge_nodes(NodeId keep, NodeId absorb, NodeId parent);

  // Non-leaf nodes whose label transform or classifier shape changed since the
  // last clear_changed().
  const std::set<NodeId>& changed() const noexcept { return changed_; }
  void clear_changed() { changed_.clear(); }

  // Hash of a node's structure, label transform and classifier weights.
  std::uint64_t node_checksum(NodeId id) const;

  // Deterministic counter folded into seeds of freshly initialized weights.
  std::uint64_t revision() const noexcept { return revision_; }

  // Restores a tree from serialized parts (see tree/snapshot.hpp).
  static Tree assemble(NodeArchitecture arch, TreeLimits limits, NodeId root, NodeId next_id,
                       std::uint64_t revision, std::map<NodeId, TreeNode> nodes);
  NodeId next_id() const noexcept { return next_id_; }

 private:
  Tree(NodeArchitecture arch, TreeLimits limits) : arch_(std::move(arch)), limits_(limits) {}

  NodeId create(NodeId parent);
  NodeId attach_leaf(NodeId parent, ClassLabel label);
  Network fresh_classifier(NodeId id, std::size_t outputs) const;
  void grow_outputs(NodeId id);
  void register_upward(NodeId from, ClassLabel label);
  std::uint64_t next_seed(std::string_view stream);

  NodeArchitecture arch_;
  TreeLimits limits_;
  std::map<NodeId, TreeNode> nodes_;
  NodeId root_ = kNoNode;
  NodeId next_id_ = 0;
  std::uint64_t revision_ = 0;
  std::set<NodeId> changed_;
};

// Inference: descend from the root following the highest output until
// a leaf. Ties go to the lowest child index. `sample` is one input without a
// batch axis.
ClassLabel class_predict(const Tree& tree, std::span<const float> sample);

// Batched inference; each node evaluates its share of the batch at once.
std::vector<ClassLabel> predict(const Tree& tree, const Tensor& batch);

// Every structural problem found, empty when the tree is valid.
std::vector<std::string> validate_tree(const Tree& tree);

}  // namespace treecnn
