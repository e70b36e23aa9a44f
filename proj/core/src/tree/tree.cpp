#include "treecnn/tree/tree.hpp"

#include <algorithm>
#include <functional>

#include "treecnn/common/error.hpp"
#include "treecnn/common/hash.hpp"

namespace treecnn {

namespace {

constexpr std::size_t kPredictChunk = 128;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  return fnv1a(std::as_bytes(std::span(&v, 1)), h);
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::root:
      return "root";
    case NodeKind::branch:
      return "branch";
    case NodeKind::leaf:
      return "leaf";
  }
  return "?";
}

Tree Tree::build(NodeArchitecture arch, TreeLimits limits, const std::vector<std::vector<ClassLabel>>& groups) {
  if (groups.size() < 2) throw TreeError("an initial tree needs at least two root children");
  Tree tree(std::move(arch), limits);
  tree.root_ = tree.create(kNoNode);
  std::set<ClassLabel> seen;
  for (const auto& group : groups) {
    if (group.empty()) throw TreeError("empty class group");
    for (auto c : group)
      if (!seen.insert(c).second) throw TreeError("class " + std::to_string(c) + " listed twice");
    if (group.size() == 1) {
      const auto leaf = tree.attach_leaf(tree.root_, group[0]);
      tree.node(tree.root_).labels.assign(group[0], tree.child_index(tree.root_, leaf));
      continue;
    }
    if (limits.max_depth == 1) throw TreeError("a branch group needs max_depth >= 2");
    if (limits.max_children && group.size() > limits.max_children)
      throw TreeError("group of " + std::to_string(group.size()) + " classes exceeds max_children");
    const auto branch = tree.create(tree.root_);
    tree.node(tree.root_).children.push_back(branch);
    const auto index = tree.node(tree.root_).children.size() - 1;
    for (std::size_t i = 0; i < group.size(); ++i) {
      tree.attach_leaf(branch, group[i]);
      tree.node(branch).labels.assign(group[i], i);
      tree.node(tree.root_).labels.assign(group[i], index);
    }
    tree.node(branch).classifier = tree.fresh_classifier(branch, group.size());
    tree.changed_.insert(branch);
  }
  tree.node(tree.root_).classifier = tree.fresh_classifier(tree.root_, groups.size());
  tree.changed_.insert(tree.root_);
  return tree;
}

Tree Tree::assemble(NodeArchitecture arch, TreeLimits limits, NodeId root, NodeId next_id, std::uint64_t revision,
                    std::map<NodeId, TreeNode> nodes) {
  Tree tree(std::move(arch), limits);
  tree.root_ = root;
  tree.next_id_ = next_id;
  tree.revision_ = revision;
  tree.nodes_ = std::move(nodes);
  if (!tree.nodes_.contains(root)) throw TreeError("root node missing");
  return tree;
}

const TreeNode& Tree::node(NodeId id) const {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) throw TreeError("no node " + std::to_string(id));
  return it->second;
}

TreeNode& Tree::node(NodeId id) {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) throw TreeError("no node " + std::to_string(id));
  return it->second;
}

NodeKind Tree::kind(NodeId id) const {
  if (id == root_) return NodeKind::root;
  return node(id).is_leaf() ? NodeKind::leaf : NodeKind::branch;
}

std::size_t Tree::depth(NodeId id) const {
  std::size_t d = 0;
  for (NodeId cur = node(id).parent; cur != kNoNode; cur = node(cur).parent) {
    if (++d > nodes_.size()) throw TreeError("cycle through node " + std::to_string(id));
  }
  return d;
}

std::size_t Tree::child_index(NodeId parent, NodeId child) const {
  const auto& kids = node(parent).children;
  const auto it = std::find(kids.begin(), kids.end(), child);
  if (it == kids.end())
    throw TreeError("node " + std::to_string(child) + " is not a child of " + std::to_string(parent));
  return static_cast<std::size_t>(it - kids.begin());
}

bool Tree::is_full(NodeId id) const {
  if (id == root_) return false;
  const auto& n = node(id);
  if (n.is_leaf()) return limits_.max_depth != 0 && depth(id) + 1 > limits_.max_depth;
  return limits_.max_children != 0 && n.children.size() >= limits_.max_children;
}

std::vector<ClassLabel> Tree::classes() const {
  std::vector<ClassLabel> out;
  for (const auto& [id, n] : nodes_)
    if (n.leaf_class) out.push_back(*n.leaf_class);
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<NodeId> Tree::leaf_of(ClassLabel label) const {
  for (const auto& [id, n] : nodes_)
    if (n.leaf_class == label) return id;
  return std::nullopt;
}

std::vector<NodeId> Tree::resolve(ClassLabel label) const {
  std::vector<NodeId> path{root_};
  NodeId cur = root_;
  while (!node(cur).is_leaf()) {
    const auto& n = node(cur);
    const auto index = n.labels.find(label);
    if (!index) throw TreeError("class " + std::to_string(label) + " missing from node " + std::to_string(cur));
    if (*index >= n.children.size())
      throw TreeError("node " + std::to_string(cur) + " routes class " + std::to_string(label) +
                      " to missing child " + std::to_string(*index));
    cur = n.children[*index];
    path.push_back(cur);
    if (path.size() > nodes_.size()) throw TreeError("label transforms form a cycle");
  }
  if (node(cur).leaf_class != label)
    throw TreeError("class " + std::to_string(label) + " resolves to leaf " + std::to_string(cur) +
                    " holding another class");
  return path;
}

NodeId Tree::create(NodeId parent) {
  const NodeId id = next_id_++;
  TreeNode n;
  n.id = id;
  n.parent = parent;
  nodes_.emplace(id, std::move(n));
  return id;
}

NodeId Tree::attach_leaf(NodeId parent, ClassLabel label) {
  const auto id = create(parent);
  node(id).leaf_class = label;
  node(parent).children.push_back(id);
  return id;
}

Network Tree::fresh_classifier(NodeId id, std::size_t outputs) const {
  const auto& base = depth(id) == 0 ? arch_.root : arch_.branch;
  return Network(with_outputs(base, outputs), derive_seed(arch_.seed, "node-init", id));
}

std::uint64_t Tree::next_seed(std::string_view stream) { return derive_seed(arch_.seed, stream, ++revision_); }

void Tree::grow_outputs(NodeId id) {
  auto& n = node(id);
  std::vector<std::optional<std::size_t>> rows(n.children.size());
  for (std::size_t i = 0; i < n.classifier->outputs() && i < rows.size(); ++i) rows[i] = i;
  n.classifier->resize_outputs(rows, next_seed("output-row"));
  changed_.insert(id);
}

void Tree::register_upward(NodeId from, ClassLabel label) {
  NodeId child = from;
  for (NodeId p = node(from).parent; p != kNoNode; child = p, p = node(p).parent) {
    node(p).labels.assign(label, child_index(p, child));
    changed_.insert(p);
  }
}

NodeId Tree::add_new_node(ClassLabel label, NodeId parent) {
  if (has_class(label)) throw TreeError("class " + std::to_string(label) + " already in the tree");
  auto& p = node(parent);
  if (p.is_leaf()) throw TreeError("cannot add a leaf under leaf " + std::to_string(parent));
  if (parent != root_ && limits_.max_children && p.children.size() >= limits_.max_children)
    throw TreeError("node " + std::to_string(parent) + " is at max_children");
  if (limits_.max_depth && depth(parent) + 1 > limits_.max_depth)
    throw TreeError("node " + std::to_string(parent) + " is at max_depth");
  const auto leaf = attach_leaf(parent, label);
  grow_outputs(parent);
  register_upward(leaf, label);
  return leaf;
}

void Tree::add_class_to_node(ClassLabel label, NodeId target) {
  if (has_class(label)) throw TreeError("class " + std::to_string(label) + " already in the tree");
  if (target == root_) throw TreeError("add_class_to_node targets a child of the grown node, not the root");
  auto& t = node(target);
  if (t.is_leaf()) {
    if (limits_.max_depth && depth(target) + 1 > limits_.max_depth)
      throw TreeError("leaf " + std::to_string(target) + " is at max_depth and cannot become a branch");
    const ClassLabel old = *t.leaf_class;
    t.leaf_class.reset();
    attach_leaf(target, old);
    const auto leaf = attach_leaf(target, label);
    node(target).labels.assign(old, 0);
    node(target).classifier = fresh_classifier(target, 2);
    node(target).trained = false;
    ++revision_;
    register_upward(leaf, label);
    changed_.insert(target);
    return;
  }
  if (limits_.max_children && t.children.size() >= limits_.max_children)
    throw TreeError("node " + std::to_string(target) + " is at max_children");
  const auto leaf = attach_leaf(target, label);
  grow_outputs(target);
  register_upward(leaf, label);
}

void Tree::merge_nodes(NodeId keep, NodeId absorb, NodeId parent) {
  if (keep == absorb) throw TreeError("cannot merge a node into itself");
  const auto absorb_index = child_index(parent, absorb);
  child_index(parent, keep);
  if (!node(absorb).is_leaf()) throw TreeError("merge: node " + std::to_string(absorb) + " is not a leaf");
  if (keep == root_ || is_full(keep)) throw TreeError("merge: node " + std::to_string(keep) + " has no capacity");

  const ClassLabel moved = *node(absorb).leaf_class;
  auto& p = node(parent);
  p.children.erase(p.children.begin() + static_cast<std::ptrdiff_t>(absorb_index));
  nodes_.erase(absorb);
  p.labels.remove_child(absorb_index);
  std::vector<std::optional<std::size_t>> rows;
  for (std::size_t i = 0; i < p.classifier->outputs(); ++i)
    if (i != absorb_index) rows.emplace_back(i);
  p.classifier->resize_outputs(rows, next_seed("output-row"));
  changed_.insert(parent);
  add_class_to_node(moved, keep);
}

std::uint64_t Tree::node_checksum(NodeId id) const {
  const auto& n = node(id);
  std::uint64_t h = mix(kFnvOffset, id);
  h = mix(h, n.parent);
  for (auto c : n.children) h = mix(h, c);
  h = mix(h, n.leaf_class ? static_cast<std::uint64_t>(*n.leaf_class) : ~std::uint64_t{0});
  for (const auto& [c, i] : n.labels.entries()) {
    h = mix(h, static_cast<std::uint64_t>(c));
    h = mix(h, i);
  }
  if (n.classifier) h = mix(h, n.classifier->checksum());
  return h;
}

ClassLabel class_predict(const Tree& tree, std::span<const float> sample) {
  const auto& shape = tree.architecture().root.input;
  if (sample.size() != shape_size(shape)) throw ShapeError("input", "sample size does not match the root network");
  Shape batch_shape{1};
  batch_shape.insert(batch_shape.end(), shape.begin(), shape.end());
  Tensor batch(batch_shape, std::vector<float>(sample.begin(), sample.end()));
  return predict(tree, batch)[0];
}

std::vector<ClassLabel> predict(const Tree& tree, const Tensor& batch) {
  if (batch.rank() < 1) throw ShapeError("input", "batch needs a leading axis");
  const std::size_t count = batch.extent(0);
  const std::size_t per = count ? batch.size() / count : 0;
  std::vector<ClassLabel> out(count, -1);

  std::function<void(NodeId, std::vector<std::size_t>)> descend = [&](NodeId id, std::vector<std::size_t> rows) {
    if (rows.empty()) return;
    const auto& n = tree.node(id);
    if (n.is_leaf()) {
      for (auto r : rows) out[r] = *n.leaf_class;
      return;
    }
    if (!n.classifier) throw TreeError("node " + std::to_string(id) + " has children but no classifier");
    if (n.classifier->outputs() != n.children.size())
      throw TreeError("node " + std::to_string(id) + " classifier width does not match its children");
    std::vector<std::vector<std::size_t>> routed(n.children.size());
    for (std::size_t start = 0; start < rows.size(); start += kPredictChunk) {
      const std::size_t m = std::min(kPredictChunk, rows.size() - start);
      Shape shape = batch.shape();
      shape[0] = m;
      Tensor sub(shape);
      for (std::size_t i = 0; i < m; ++i)
        std::copy_n(batch.data() + rows[start + i] * per, per, sub.data() + i * per);
      const auto scores = n.classifier->forward(sub);
      const std::size_t k = scores.extent(1);
      for (std::size_t i = 0; i < m; ++i) {
        const float* row = scores.data() + i * k;
        const auto best = static_cast<std::size_t>(std::max_element(row, row + k) - row);
        routed[best].push_back(rows[start + i]);
      }
    }
    for (std::size_t c = 0; c < routed.size(); ++c) descend(n.children[c], std::move(routed[c]));
  };

  std::vector<std::size_t> all(count);
  for (std::size_t i = 0; i < count; ++i) all[i] = i;
  descend(tree.root(), std::move(all));
  return out;
}

std::vector<std::string> validate_tree(const Tree& tree) {
  std::vector<std::string> problems;
  const auto& nodes = tree.nodes();
  const auto name = [](NodeId id) { return "node " + std::to_string(id); };
  if (!nodes.contains(tree.root())) return {"root node missing"};
  if (tree.node(tree.root()).parent != kNoNode) problems.push_back("root has a parent");

  // reachability and parent/child agreement
  std::set<NodeId> seen;
  std::vector<std::pair<NodeId, std::size_t>> stack{{tree.root(), 0}};
  std::map<NodeId, std::size_t> depth_of;
  while (!stack.empty()) {
    const auto [id, d] = stack.back();
    stack.pop_back();
    if (!seen.insert(id).second) {
      problems.push_back(name(id) + " reached twice (cycle or shared child)");
      continue;
    }
    depth_of[id] = d;
    for (auto c : nodes.at(id).children) {
      if (!nodes.contains(c)) {
        problems.push_back(name(id) + " lists missing child " + std::to_string(c));
        continue;
      }
      if (nodes.at(c).parent != id) problems.push_back(name(c) + " does not point back to parent " + std::to_string(id));
      stack.emplace_back(c, d + 1);
    }
  }
  for (const auto& [id, n] : nodes)
    if (!seen.contains(id)) problems.push_back(name(id) + " unreachable from the root");

  std::map<ClassLabel, NodeId> leaf_for;
  for (const auto& [id, n] : nodes) {
    if (!seen.contains(id)) continue;
    const auto& lim = tree.limits();
    if (lim.max_depth && depth_of[id] > lim.max_depth) problems.push_back(name(id) + " deeper than max_depth");
    if (n.is_leaf()) {
      if (!n.leaf_class) problems.push_back(name(id) + " is a leaf without a class");
      if (n.classifier) problems.push_back(name(id) + " is a leaf with a classifier");
      if (n.labels.size()) problems.push_back(name(id) + " is a leaf with a label transform");
      if (n.leaf_class) {
        if (const auto [it, fresh] = leaf_for.emplace(*n.leaf_class, id); !fresh)
          problems.push_back("duplicate leaf class " + std::to_string(*n.leaf_class) + " (nodes " +
                             std::to_string(it->second) + ", " + std::to_string(id) + ")");
      }
      continue;
    }
    if (n.leaf_class) problems.push_back(name(id) + " has children and a leaf class");
    if (n.children.size() < 2) problems.push_back(name(id) + " has " + std::to_string(n.children.size()) + " child");
    if (id != tree.root() && lim.max_children && n.children.size() > lim.max_children)
      problems.push_back(name(id) + " exceeds max_children");
    if (!n.classifier) {
      problems.push_back(name(id) + " has children but no classifier");
    } else if (n.classifier->outputs() != n.children.size()) {
      problems.push_back(name(id) + " classifier has " + std::to_string(n.classifier->outputs()) + " outputs for " +
                         std::to_string(n.children.size()) + " children");
    }
  }

  // label transforms: each non-leaf maps exactly the classes of its subtree to
  // the child holding them
  std::function<std::set<ClassLabel>(NodeId, std::size_t)> subtree = [&](NodeId id, std::size_t guard) {
    std::set<ClassLabel> out;
    if (guard > nodes.size() || !nodes.contains(id)) return out;
    const auto& n = nodes.at(id);
    if (n.is_leaf()) {
      if (n.leaf_class) out.insert(*n.leaf_class);
      return out;
    }
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      for (auto c : subtree(n.children[i], guard + 1)) {
        out.insert(c);
        const auto mapped = n.labels.find(c);
        if (!mapped) {
          problems.push_back(name(id) + " label transform lacks class " + std::to_string(c));
        } else if (*mapped != i) {
          problems.push_back(name(id) + " maps class " + std::to_string(c) + " to child " + std::to_string(*mapped) +
                             " instead of " + std::to_string(i));
        }
      }
    }
    for (auto c : n.labels.classes())
      if (!out.contains(c)) problems.push_back(name(id) + " label transform has stray class " + std::to_string(c));
    return out;
  };
  subtree(tree.root(), 0);
  return problems;
}

}  // namespace treecnn
