#include "treecnn/tree/snapshot.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "treecnn/common/error.hpp"

namespace treecnn {

namespace {

using json = nlohmann::ordered_json;

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t unhex(const std::string& s) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used, 16);
  if (used != s.size()) throw FormatError("snapshot: bad hex value '" + s + "'");
  return v;
}

}  // namespace

std::string tree_snapshot(const Tree& tree) {
  json j;
  j["format"] = "treecnn-tree";
  j["version"] = 1;
  j["limits"] = {{"max_children", tree.limits().max_children}, {"max_depth", tree.limits().max_depth}};
  j["architecture"] = {{"root", json::parse(to_text(tree.architecture().root))},
                       {"branch", json::parse(to_text(tree.architecture().branch))},
                       {"seed", tree.architecture().seed}};
  j["root"] = tree.root();
  j["next_id"] = tree.next_id();
  j["revision"] = tree.revision();
  json nodes = json::array();
  for (const auto& [id, n] : tree.nodes()) {
    json e;
    e["id"] = id;
    e["parent"] = n.parent == kNoNode ? json(nullptr) : json(n.parent);
    e["children"] = n.children;
    e["leaf_class"] = n.leaf_class ? json(*n.leaf_class) : json(nullptr);
    json labels = json::array();
    for (const auto& [c, i] : n.labels.entries()) labels.push_back({c, i});
    e["labels"] = labels;
    if (n.classifier) {
      e["classifier"] = {{"outputs", n.classifier->outputs()},
                         {"trained", n.trained},
                         {"spec_hash", hex(spec_hash(n.classifier->spec()))},
                         {"checksum", hex(n.classifier->checksum())}};
    } else {
      e["classifier"] = nullptr;
    }
    nodes.push_back(e);
  }
  j["nodes"] = nodes;
  return j.dump(2) + "\n";
}

Tree tree_from_snapshot(std::string_view text, const WeightLoader& loader) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("snapshot: ") + e.what());
  }
  try {
    if (j.at("format") != "treecnn-tree" || j.at("version") != 1) throw FormatError("snapshot: unknown format");
    TreeLimits limits{j.at("limits").at("max_children").get<std::size_t>(),
                      j.at("limits").at("max_depth").get<std::size_t>()};
    NodeArchitecture arch{spec_from_text(j.at("architecture").at("root").dump()),
                          spec_from_text(j.at("architecture").at("branch").dump()),
                          j.at("architecture").at("seed").get<std::uint64_t>()};
    const auto root = j.at("root").get<NodeId>();

    std::map<NodeId, TreeNode> nodes;
    for (const auto& e : j.at("nodes")) {
      TreeNode n;
      n.id = e.at("id").get<NodeId>();
      n.parent = e.at("parent").is_null() ? kNoNode : e.at("parent").get<NodeId>();
      n.children = e.at("children").get<std::vector<NodeId>>();
      if (!e.at("leaf_class").is_null()) n.leaf_class = e.at("leaf_class").get<ClassLabel>();
      for (const auto& pair : e.at("labels")) n.labels.assign(pair.at(0).get<ClassLabel>(), pair.at(1).get<std::size_t>());
      if (!nodes.emplace(n.id, std::move(n)).second) throw FormatError("snapshot: duplicate node id");
    }
    // classifier shapes depend on depth, so attach them once parents are known
    auto tree = Tree::assemble(arch, limits, root, j.at("next_id").get<NodeId>(), j.at("revision").get<std::uint64_t>(),
                               std::move(nodes));
    for (const auto& e : j.at("nodes")) {
      const auto& c = e.at("classifier");
      if (c.is_null()) continue;
      const auto id = e.at("id").get<NodeId>();
      const auto& base = tree.depth(id) == 0 ? arch.root : arch.branch;
      const auto spec = with_outputs(base, c.at("outputs").get<std::size_t>());
      if (spec_hash(spec) != unhex(c.at("spec_hash").get<std::string>()))
        throw FormatError("snapshot: node " + std::to_string(id) + " spec hash mismatch");
      if (loader) {
        auto net = loader(id, spec);
        if (net.checksum() != unhex(c.at("checksum").get<std::string>()))
          throw FormatError("snapshot: node " + std::to_string(id) + " weights do not match the recorded checksum");
        tree.node(id).classifier = std::move(net);
        tree.node(id).trained = c.value("trained", false);
      } else {
        tree.node(id).classifier = Network(spec, derive_seed(arch.seed, "node-init", id));
      }
    }
    return tree;
  } catch (const json::exception& e) {
    throw FormatError(std::string("snapshot: ") + e.what());
  }
}

std::string to_dot(const Tree& tree, std::span<const std::string> class_names) {
  std::ostringstream out;
  out << "digraph tree {\n  node [style=filled, fontname=\"Helvetica\"];\n";
  for (const auto& [id, n] : tree.nodes()) {
    const auto kind = tree.kind(id);
    out << "  n" << id << " [class=\"" << to_string(kind) << "\", ";
    if (kind == NodeKind::leaf) {
      const auto c = *n.leaf_class;
      const bool named = c >= 0 && static_cast<std::size_t>(c) < class_names.size();
      out << "label=\"" << (named ? class_names[c] : std::to_string(c)) << "\", shape=ellipse, fillcolor=\"palegreen\"";
    } else if (kind == NodeKind::root) {
      out << "label=\"root\", shape=box, fillcolor=\"lightgray\"";
    } else {
      const bool full = tree.is_full(id);
      out << "label=\"B" << id << "\", shape=box, fillcolor=\"" << (full ? "yellow" : "lightblue") << "\"";
      if (full) out << ", peripheries=2";
    }
    out << "];\n";
  }
  for (const auto& [id, n] : tree.nodes())
    for (auto c : n.children) out << "  n" << id << " -> n" << c << ";\n";
  out << "}\n";
  return out.str();
}

}  // namespace treecnn
