#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "reference_grow.hpp"
#include "stub_classifiers.hpp"
#include "treecnn/common/error.hpp"
#include "treecnn/growth/apply.hpp"

using namespace treecnn;
using namespace treecnn::testing;

namespace {

ChildSummary leaf(NodeId id, bool can_deepen = true) { return {id, true, 0, can_deepen}; }
ChildSummary branch(NodeId id, std::size_t children) { return {id, false, children, true}; }

// Averaged-output column whose softmax is exactly proportional to `likelihood`.
GrowthInput single_column(std::vector<ChildSummary> children, const std::vector<double>& likelihood,
                          ClassLabel label = 5) {
  GrowthInput in;
  in.node = 0;
  in.children = std::move(children);
  in.new_classes = {label};
  in.averaged = Matrix(likelihood.size(), 1);
  for (std::size_t k = 0; k < likelihood.size(); ++k) in.averaged(k, 0) = std::log(likelihood[k]);
  return in;
}

}  // namespace

TEST(Likelihood, AverageMatchesTripleLoop) {
  Rng rng(3);
  SampleOutputs o{3, 4, 5, {}};
  o.values.resize(60);
  for (auto& v : o.values) v = uniform01(rng);
  const auto avg = average_outputs(o);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t m = 0; m < 4; ++m) {
      double s = 0;
      for (std::size_t i = 0; i < 5; ++i) s += o.values[k * 20 + m * 5 + i];
      EXPECT_DOUBLE_EQ(avg(k, m), s / 5);
    }
}

TEST(Likelihood, ClosedForms) {
  Matrix even(2, 1);
  even(0, 0) = even(1, 0) = 1.0;
  auto l = compute_likelihood(even, {false, false});
  EXPECT_NEAR(l(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(l(1, 0), 0.5, 1e-12);

  Matrix ln3(2, 1);
  ln3(0, 0) = std::log(3.0);
  ln3(1, 0) = 0.0;
  l = compute_likelihood(ln3, {false, false});
  EXPECT_NEAR(l(0, 0), 0.75, 1e-12);
  EXPECT_NEAR(l(1, 0), 0.25, 1e-12);

  Matrix three(3, 1, 2.0);
  three(1, 0) = 50.0;
  l = compute_likelihood(three, {false, true, false});
  EXPECT_NEAR(l(0, 0), 0.5, 1e-12);
  EXPECT_EQ(l(1, 0), 0.0);
  EXPECT_NEAR(l(2, 0), 0.5, 1e-12);

  EXPECT_THROW(compute_likelihood(three, {true, true, true}), TreeError);
}

TEST(Likelihood, ColumnsSumToOneAndShiftInvariant) {
  Rng rng(11);
  Matrix avg(6, 5);
  for (auto& v : avg.data) v = (uniform01(rng) - 0.5) * 20;
  const std::vector<bool> mask{false, true, false, false, true, false};
  const auto l = compute_likelihood(avg, mask);
  Matrix shifted = avg;
  for (std::size_t m = 0; m < 5; ++m)
    for (std::size_t k = 0; k < 6; ++k) shifted(k, m) += 7.0 * static_cast<double>(m + 1);
  const auto l2 = compute_likelihood(shifted, mask);
  for (std::size_t m = 0; m < 5; ++m) {
    double s = 0;
    for (std::size_t k = 0; k < 6; ++k) {
      s += l(k, m);
      EXPECT_NEAR(l(k, m), l2(k, m), 1e-12);
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(Candidates, MatchSortEverything) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + uniform_index(rng, 7), m = 1 + uniform_index(rng, 9);
    Matrix l(k, m);
    // coarse values so that ties are common
    for (auto& v : l.data) v = static_cast<double>(uniform_index(rng, 4)) / 4;
    std::vector<bool> mask(k);
    for (std::size_t r = 0; r < k; ++r) mask[r] = uniform_index(rng, 4) == 0;
    mask[uniform_index(rng, k)] = false;
    std::vector<ClassLabel> labels;
    for (std::size_t c = 0; c < m; ++c) labels.push_back(static_cast<ClassLabel>(m - c) * 3);
    const auto got = build_candidates(l, labels, mask);

    std::vector<std::tuple<double, ClassLabel, std::vector<std::pair<double, std::size_t>>>> want;
    for (std::size_t c = 0; c < m; ++c) {
      std::vector<std::pair<double, std::size_t>> col;
      for (std::size_t r = 0; r < k; ++r)
        if (!mask[r]) col.emplace_back(l(r, c), r);
      std::stable_sort(col.begin(), col.end(), [](auto& a, auto& b) { return a.first > b.first; });
      while (col.size() < 3) col.emplace_back(0.0, kNoRow);
      col.resize(3);
      want.emplace_back(col[0].first, labels[c], col);
    }
    std::sort(want.begin(), want.end(), [](auto& a, auto& b) {
      return std::get<0>(a) != std::get<0>(b) ? std::get<0>(a) > std::get<0>(b) : std::get<1>(a) < std::get<1>(b);
    });
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].label, std::get<1>(want[i]));
      for (std::size_t s = 0; s < 3; ++s) {
        EXPECT_EQ(got[i].value[s], std::get<2>(want[i])[s].first);
        EXPECT_EQ(got[i].row[s], std::get<2>(want[i])[s].second);
      }
    }
  }
}

TEST(CheckForMerge, Conditions) {
  EXPECT_FALSE(check_for_merge(leaf(1), branch(2, 3), 5));
  EXPECT_FALSE(check_for_merge(branch(1, 4), leaf(2), 5));
  EXPECT_TRUE(check_for_merge(branch(1, 3), leaf(2), 5));
  EXPECT_TRUE(check_for_merge(leaf(1), leaf(2), 5));
  EXPECT_FALSE(check_for_merge(leaf(1, false), leaf(2), 5));
}

TEST(Grow, MergeExample) {
  GrowthConfig cfg;
  cfg.max_children = 5;
  const auto plan = grow(single_column({leaf(1), leaf(2), leaf(3), leaf(4)}, {0.48, 0.45, 0.05, 0.02}), cfg);
  ASSERT_EQ(plan.actions.size(), 1u);
  const auto& a = plan.actions[0];
  EXPECT_EQ(a.kind, PlacementKind::merge_then_add);
  EXPECT_EQ(a.target, 1u);
  EXPECT_EQ(a.absorbed, 2u);
  EXPECT_NEAR(a.value[0], 0.48, 1e-12);
  EXPECT_NEAR(a.value[1], 0.45, 1e-12);
  EXPECT_NEAR(a.value[2], 0.05, 1e-12);
}

TEST(Grow, NewLeafExample) {
  const auto plan = grow(single_column({leaf(1), leaf(2), leaf(3)}, {0.34, 0.33, 0.33}), GrowthConfig{});
  ASSERT_EQ(plan.actions.size(), 1u);
  EXPECT_EQ(plan.actions[0].kind, PlacementKind::new_leaf);
  EXPECT_EQ(plan.actions[0].target, 0u);
}

TEST(Grow, TwoChildrenAlphaZeroAlwaysAddsToChild) {
  GrowthConfig cfg;
  cfg.alpha = 0;
  auto plan = grow(single_column({branch(1, 3), branch(2, 3)}, {0.6, 0.4}), cfg);
  ASSERT_EQ(plan.actions.size(), 1u);
  EXPECT_EQ(plan.actions[0].kind, PlacementKind::add_to_child);
  EXPECT_EQ(plan.actions[0].target, 1u);

  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    GrowthInput in;
    in.node = 0;
    in.children = {branch(1, 2 + uniform_index(rng, 4)), branch(2, 2 + uniform_index(rng, 4))};
    const std::size_t m = 1 + uniform_index(rng, 4);
    in.averaged = Matrix(2, m);
    for (std::size_t c = 0; c < m; ++c) {
      in.new_classes.push_back(static_cast<ClassLabel>(c));
      in.averaged(0, c) = uniform01(rng);
      in.averaged(1, c) = uniform_index(rng, 4) == 0 ? in.averaged(0, c) : uniform01(rng);
    }
    for (const auto& a : grow(in, cfg).actions) EXPECT_EQ(a.kind, PlacementKind::add_to_child);
  }
}

TEST(Grow, MergeBlockedFallsBackToSmallerNode) {
  GrowthConfig cfg;
  cfg.max_children = 5;
  // n2 is a branch, so the merge fails; n2 has fewer children than n1
  const auto plan = grow(single_column({branch(1, 4), branch(2, 2), leaf(3)}, {0.48, 0.45, 0.07}), cfg);
  ASSERT_EQ(plan.actions.size(), 1u);
  EXPECT_EQ(plan.actions[0].kind, PlacementKind::add_to_child);
  EXPECT_EQ(plan.actions[0].target, 2u);
}

TEST(Grow, EveryChildFullGivesNewLeavesInLabelOrder) {
  GrowthConfig cfg;
  cfg.max_children = 3;
  GrowthInput in;
  in.node = 0;
  in.children = {branch(1, 3), leaf(2, false)};
  in.new_classes = {9, 4};
  in.averaged = Matrix(2, 2, 0.0);
  const auto plan = grow(in, cfg);
  ASSERT_EQ(plan.actions.size(), 2u);
  EXPECT_EQ(plan.actions[0].label, 4);
  EXPECT_EQ(plan.actions[1].label, 9);
  for (const auto& a : plan.actions) EXPECT_EQ(a.kind, PlacementKind::new_leaf);

  in.is_root = false;
  EXPECT_THROW(grow(in, cfg), TreeError);
}

TEST(Grow, PlanShiftInvariant) {
  Rng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    GrowthConfig cfg;
    auto in = random_growth_input(rng, cfg);
    auto shifted = in;
    for (std::size_t m = 0; m < in.averaged.cols; ++m) {
      // power-of-two offsets keep the per-column differences exact
      const double c = std::ldexp(1.0, static_cast<int>(m % 4));
      for (std::size_t k = 0; k < in.averaged.rows; ++k) shifted.averaged(k, m) += c;
    }
    PlacementPlan a, b;
    try {
      a = grow(in, cfg);
    } catch (const TreeError&) {
      EXPECT_THROW(grow(shifted, cfg), TreeError);
      continue;
    }
    b = grow(shifted, cfg);
    ASSERT_EQ(a.actions.size(), b.actions.size());
    for (std::size_t i = 0; i < a.actions.size(); ++i) {
      EXPECT_EQ(a.actions[i].kind, b.actions[i].kind);
      EXPECT_EQ(a.actions[i].label, b.actions[i].label);
      EXPECT_EQ(a.actions[i].target, b.actions[i].target);
      EXPECT_EQ(a.actions[i].absorbed, b.actions[i].absorbed);
    }
  }
}

TEST(Grow, MatchesStraightLineReference) {
  Rng rng(31);
  std::map<PlacementKind, int> seen;
  int compared = 0;
  for (int trial = 0; trial < 1500; ++trial) {
    GrowthConfig cfg;
    const auto in = random_growth_input(rng, cfg);
    std::string got, want;
    bool got_threw = false, want_threw = false;
    try {
      const auto plan = grow(in, cfg);
      got = plan_to_text(plan);
      for (const auto& a : plan.actions) ++seen[a.kind];
      EXPECT_EQ(plan.actions.size(), in.new_classes.size());
    } catch (const TreeError&) {
      got_threw = true;
    }
    try {
      want = plan_to_text(reference_grow(in, cfg));
    } catch (const TreeError&) {
      want_threw = true;
    }
    ASSERT_EQ(got_threw, want_threw) << "trial " << trial;
    ASSERT_EQ(got, want) << "trial " << trial;
    if (!got_threw) ++compared;
  }
  EXPECT_GE(compared, 1000);
  EXPECT_GT(seen[PlacementKind::add_to_child], 0);
  EXPECT_GT(seen[PlacementKind::merge_then_add], 0);
  EXPECT_GT(seen[PlacementKind::new_leaf], 0);
}

TEST(Grow, NoActionTargetsAFullChild) {
  Rng rng(37);
  for (int trial = 0; trial < 500; ++trial) {
    GrowthConfig cfg;
    const auto in = random_growth_input(rng, cfg);
    PlacementPlan plan;
    try {
      plan = grow(in, cfg);
    } catch (const TreeError&) {
      continue;
    }
    std::map<NodeId, ChildSummary> state;
    for (const auto& c : in.children) state[c.id] = c;
    for (const auto& a : plan.actions) {
      if (a.kind == PlacementKind::new_leaf) continue;
      auto& t = state.at(a.target);
      ASSERT_FALSE(is_full(t, cfg.max_children)) << "trial " << trial;
      if (a.kind == PlacementKind::merge_then_add) {
        t.child_count = effective_children(t) + 2;
        state.erase(a.absorbed);
      } else {
        t.child_count = t.is_leaf ? 2 : t.child_count + 1;
      }
      t.is_leaf = false;
    }
  }
}

TEST(Grow, PlanTextRoundTrip) {
  Rng rng(41);
  GrowthConfig cfg;
  auto in = random_growth_input(rng, cfg);
  in.is_root = true;
  const auto plan = grow(in, cfg);
  EXPECT_EQ(plan_from_text(plan_to_text(plan)), plan);
  EXPECT_THROW(plan_from_text("{\"node\": 0, \"actions\": [{\"action\": \"jump\"}]}"), FormatError);
  EXPECT_THROW(plan_from_text("not json"), FormatError);
}

TEST(Grow, ReplayRespectsMaxChildren) {
  Rng rng(43);
  constexpr std::size_t kClasses = 40;
  for (int trial = 0; trial < 200; ++trial) {
    const TreeLimits limits{2 + uniform_index(rng, 4), 2};
    // root with a mix of leaves and branches over classes 0..n
    std::vector<std::vector<ClassLabel>> groups;
    ClassLabel next = 0;
    const std::size_t k = 2 + uniform_index(rng, 5);
    for (std::size_t g = 0; g < k; ++g) {
      const std::size_t size = uniform_index(rng, 2) ? 1 : 2 + uniform_index(rng, limits.max_children - 1);
      std::vector<ClassLabel> group;
      for (std::size_t i = 0; i < size; ++i) group.push_back(next++);
      groups.push_back(group);
    }
    auto tree = Tree::build(stub_architecture(kClasses), limits, groups);
    GrowthInput in;
    in.node = tree.root();
    in.children = summarize_children(tree, in.node);
    const std::size_t m = 1 + uniform_index(rng, 8);
    in.averaged = Matrix(in.children.size(), m);
    for (std::size_t c = 0; c < m; ++c) in.new_classes.push_back(next++);
    for (auto& v : in.averaged.data) v = (uniform01(rng) - 0.5) * 3;
    GrowthConfig base;
    base.alpha = uniform01(rng) * 0.3;
    base.beta = uniform01(rng) * 0.3;
    const auto plan = grow(in, growth_config_for(tree, base));
    apply_plan(tree, plan);
    EXPECT_TRUE(validate_tree(tree).empty()) << validate_tree(tree).front();
    for (const auto& [id, n] : tree.nodes())
      if (id != tree.root()) EXPECT_LE(n.children.size(), limits.max_children);
    for (auto c : in.new_classes) EXPECT_TRUE(tree.has_class(c));
  }
}
