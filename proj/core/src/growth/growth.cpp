#include "treecnn/growth/growth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "treecnn/common/error.hpp"
#include "treecnn/common/random.hpp"

namespace treecnn {

namespace {

using json = nlohmann::ordered_json;

bool before(const Candidate& a, const Candidate& b) {
  if (a.value[0] != b.value[0]) return a.value[0] > b.value[0];
  return a.label < b.label;
}

// Top-3 unmasked rows of one likelihood column.
Candidate column_candidate(const Matrix& l, std::size_t col, ClassLabel label, const std::vector<bool>& mask) {
  Candidate c;
  c.label = label;
  c.column = col;
  for (std::size_t r = 0; r < l.rows; ++r) {
    if (mask[r]) continue;
    const double v = l(r, col);
    // insert into the descending top-3, keeping earlier rows ahead on ties
    for (std::size_t slot = 0; slot < 3; ++slot) {
      if (c.row[slot] == kNoRow || v > c.value[slot]) {
        for (std::size_t s = 2; s > slot; --s) {
          c.value[s] = c.value[s - 1];
          c.row[s] = c.row[s - 1];
        }
        c.value[slot] = v;
        c.row[slot] = r;
        break;
      }
    }
  }
  for (std::size_t slot = 0; slot < 3; ++slot)
    if (c.row[slot] == kNoRow) c.value[slot] = 0.0;
  return c;
}

struct GrowState {
  std::vector<ChildSummary> rows;
  Matrix averaged;  // rows follow `rows`
  std::size_t new_leaves = 0;
};

}  // namespace

Matrix average_outputs(const SampleOutputs& o) {
  if (o.children == 0 || o.classes == 0 || o.images == 0)
    throw ConfigError("outputs", "K, M and I must all be at least 1");
  if (o.values.size() != o.children * o.classes * o.images) throw ShapeError("outputs", "value count does not match K*M*I");
  Matrix avg(o.children, o.classes);
  for (std::size_t k = 0; k < o.children; ++k)
    for (std::size_t m = 0; m < o.classes; ++m) {
      double sum = 0.0;
      for (std::size_t i = 0; i < o.images; ++i) sum += o(k, m, i);
      avg(k, m) = sum / static_cast<double>(o.images);
    }
  return avg;
}

Matrix compute_likelihood(const Matrix& averaged, const std::vector<bool>& full_mask) {
  if (full_mask.size() != averaged.rows) throw ShapeError("likelihood", "mask length does not match row count");
  if (std::all_of(full_mask.begin(), full_mask.end(), [](bool b) { return b; }))
    throw TreeError("every child is full; the class must become a new leaf");
  Matrix l(averaged.rows, averaged.cols);
  for (std::size_t m = 0; m < averaged.cols; ++m) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < averaged.rows; ++k)
      if (!full_mask[k]) top = std::max(top, averaged(k, m));
    double sum = 0.0;
    for (std::size_t k = 0; k < averaged.rows; ++k)
      if (!full_mask[k]) sum += std::exp(averaged(k, m) - top);
    for (std::size_t k = 0; k < averaged.rows; ++k)
      l(k, m) = full_mask[k] ? 0.0 : std::exp(averaged(k, m) - top) / sum;
  }
  return l;
}

std::vector<Candidate> build_candidates(const Matrix& likelihood, std::span<const ClassLabel> labels,
                                        const std::vector<bool>& full_mask) {
  if (labels.size() != likelihood.cols) throw ShapeError("candidates", "one label per column required");
  std::vector<Candidate> out;
  for (std::size_t m = 0; m < likelihood.cols; ++m) out.push_back(column_candidate(likelihood, m, labels[m], full_mask));
  std::sort(out.begin(), out.end(), before);
  return out;
}

void validate(const GrowthConfig& c) {
  if (!(c.alpha >= 0 && c.alpha <= 1)) throw ConfigError("growth.alpha", "must be in [0, 1]");
  if (!(c.beta >= 0 && c.beta <= 1)) throw ConfigError("growth.beta", "must be in [0, 1]");
  if (c.max_children < 2) throw ConfigError("growth.max_children", "must be at least 2");
  if (c.max_depth < 1) throw ConfigError("growth.max_depth", "must be at least 1");
}

std::size_t effective_children(const ChildSummary& child) { return child.is_leaf ? 1 : child.child_count; }

bool is_full(const ChildSummary& child, std::size_t max_children) {
  return child.is_leaf ? !child.can_deepen : child.child_count >= max_children;
}

bool check_for_merge(const ChildSummary& node1, const ChildSummary& node2, std::size_t max_children) {
  if (!node2.is_leaf) return false;
  if (node1.is_leaf && !node1.can_deepen) return false;
  return effective_children(node1) + 1 < max_children;
}

std::string_view to_string(PlacementKind kind) {
  switch (kind) {
    case PlacementKind::add_to_child:
      return "add-to-child";
    case PlacementKind::merge_then_add:
      return "merge-then-add";
    case PlacementKind::new_leaf:
      return "new-leaf";
  }
  return "?";
}

PlacementPlan grow(const GrowthInput& input, const GrowthConfig& config) {
  validate(config);
  const std::size_t k_rows = input.children.size();
  const std::size_t m_cols = input.new_classes.size();
  if (input.averaged.rows != k_rows || input.averaged.cols != m_cols)
    throw ShapeError("growth", "averaged outputs must be children x new classes");

  PlacementPlan plan;
  plan.node = input.node;
  GrowState st{input.children, input.averaged, 0};
  Rng rng(derive_seed(config.seed, "merge-tiebreak", input.node));

  std::vector<bool> pending(m_cols, true);
  std::size_t remaining = m_cols;
  std::vector<Candidate> cache(m_cols);
  bool stale = true;
  std::vector<bool> mask;

  const auto leaf_slot = [&] {
    return input.is_root || st.rows.size() + st.new_leaves < config.max_children;
  };
  const auto recompute_mask = [&] {
    std::vector<bool> m(st.rows.size());
    for (std::size_t r = 0; r < st.rows.size(); ++r) m[r] = is_full(st.rows[r], config.max_children);
    if (m != mask) stale = true;
    mask = std::move(m);
  };
  const auto node_at = [&](std::size_t row) { return row == kNoRow ? kNoNode : st.rows[row].id; };
  const auto add_to = [&](std::size_t row) {
    auto& s = st.rows[row];
    s.child_count = s.is_leaf ? 2 : s.child_count + 1;
    s.is_leaf = false;
  };

  while (remaining > 0) {
    recompute_mask();
    if (std::all_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
      // nothing can take a class: every remaining class becomes a leaf here
      std::vector<std::size_t> cols;
      for (std::size_t m = 0; m < m_cols; ++m)
        if (pending[m]) cols.push_back(m);
      std::sort(cols.begin(), cols.end(),
                [&](std::size_t a, std::size_t b) { return input.new_classes[a] < input.new_classes[b]; });
      for (auto m : cols) {
        if (!leaf_slot()) throw TreeError("node " + std::to_string(input.node) + " and all its children are full");
        Placement p;
        p.kind = PlacementKind::new_leaf;
        p.label = input.new_classes[m];
        p.target = input.node;
        p.note = "all children full";
        plan.actions.push_back(p);
        ++st.new_leaves;
      }
      break;
    }

    if (stale) {
      const auto l = compute_likelihood(st.averaged, mask);
      for (std::size_t m = 0; m < m_cols; ++m)
        if (pending[m]) cache[m] = column_candidate(l, m, input.new_classes[m], mask);
      stale = false;
    }
    std::size_t pick = kNoRow;
    for (std::size_t m = 0; m < m_cols; ++m)
      if (pending[m] && (pick == kNoRow || before(cache[m], cache[pick]))) pick = m;
    const Candidate c = cache[pick];
    pending[pick] = false;
    --remaining;

    Placement p;
    p.label = c.label;
    p.value = c.value;
    for (std::size_t s = 0; s < 3; ++s) p.nodes[s] = node_at(c.row[s]);
    const double v1 = c.value[0], v2 = c.value[1], v3 = c.value[2];

    if (v1 - v2 > config.alpha) {
      p.kind = PlacementKind::add_to_child;
      p.target = node_at(c.row[0]);
      add_to(c.row[0]);
    } else if (v2 - v3 > config.beta) {
      std::size_t keep = c.row[0], absorb = c.row[1];
      if (v1 == v2 && uniform_index(rng, 2) == 1) std::swap(keep, absorb);
      const bool parent_keeps_two = st.rows.size() + st.new_leaves >= 3;
      if (parent_keeps_two && check_for_merge(st.rows[keep], st.rows[absorb], config.max_children)) {
        p.kind = PlacementKind::merge_then_add;
        p.target = st.rows[keep].id;
        p.absorbed = st.rows[absorb].id;
        auto& k = st.rows[keep];
        k.child_count = k.is_leaf ? 3 : k.child_count + 2;
        k.is_leaf = false;
        st.rows.erase(st.rows.begin() + static_cast<std::ptrdiff_t>(absorb));
        Matrix shrunk(st.rows.size(), m_cols);
        for (std::size_t r = 0, src = 0; src < st.averaged.rows; ++src) {
          if (src == absorb) continue;
          for (std::size_t m = 0; m < m_cols; ++m) shrunk(r, m) = st.averaged(src, m);
          ++r;
        }
        st.averaged = std::move(shrunk);
        mask.clear();
        stale = true;
      } else {
        const std::size_t r1 = c.row[0], r2 = c.row[1];
        const std::size_t target =
            effective_children(st.rows[r2]) < effective_children(st.rows[r1]) ? r2 : r1;
        p.kind = PlacementKind::add_to_child;
        p.target = st.rows[target].id;
        p.note = "merge not possible; added to the smaller node";
        add_to(target);
      }
    } else if (leaf_slot()) {
      p.kind = PlacementKind::new_leaf;
      p.target = input.node;
      ++st.new_leaves;
    } else {
      p.kind = PlacementKind::add_to_child;
      p.target = node_at(c.row[0]);
      p.note = "grown node full; added to the strongest child";
      add_to(c.row[0]);
    }
    plan.actions.push_back(p);
  }
  return plan;
}

std::string plan_to_text(const PlacementPlan& plan) {
  const auto id = [](NodeId n) { return n == kNoNode ? json(nullptr) : json(n); };
  json j;
  j["node"] = id(plan.node);
  json actions = json::array();
  for (const auto& a : plan.actions) {
    json e;
    e["action"] = to_string(a.kind);
    e["class"] = a.label;
    e["target"] = id(a.target);
    e["absorbed"] = id(a.absorbed);
    e["values"] = a.value;
    e["nodes"] = {id(a.nodes[0]), id(a.nodes[1]), id(a.nodes[2])};
    e["note"] = a.note;
    actions.push_back(e);
  }
  j["actions"] = actions;
  return j.dump(2) + "\n";
}

PlacementPlan plan_from_text(std::string_view text) {
  const auto id = [](const json& v) { return v.is_null() ? kNoNode : v.get<NodeId>(); };
  try {
    const auto j = json::parse(text);
    PlacementPlan plan;
    plan.node = id(j.at("node"));
    for (const auto& e : j.at("actions")) {
      Placement a;
      const auto kind = e.at("action").get<std::string>();
      if (kind == "add-to-child") {
        a.kind = PlacementKind::add_to_child;
      } else if (kind == "merge-then-add") {
        a.kind = PlacementKind::merge_then_add;
      } else if (kind == "new-leaf") {
        a.kind = PlacementKind::new_leaf;
      } else {
        throw FormatError("plan: unknown action '" + kind + "'");
      }
      a.label = e.at("class").get<ClassLabel>();
      a.target = id(e.at("target"));
      a.absorbed = id(e.at("absorbed"));
      a.value = e.at("values").get<std::array<double, 3>>();
      for (std::size_t s = 0; s < 3; ++s) a.nodes[s] = id(e.at("nodes").at(s));
      a.note = e.at("note").get<std::string>();
      plan.actions.push_back(std::move(a));
    }
    return plan;
  } catch (const json::exception& e) {
    throw FormatError(std::string("plan: ") + e.what());
  }
}

}  // namespace treecnn
