#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treecnn/common/types.hpp"

namespace treecnn {

// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// Output of child neuron k for image i of new class m, stored [k][m][i].
struct SampleOutputs {
  std::size_t children = 0;  // K
  std::size_t classes = 0;   // M
  std::size_t images = 0;    // I
  std::vector<double> values;

  double& operator()(std::size_t k, std::size_t m, std::size_t i) { return values[(k * classes + m) * images + i]; }
  double operator()(std::size_t k, std::size_t m, std::size_t i) const {
    return values[(k * classes + m) * images + i];
  }
};

// K x M mean over the images of each class.
Matrix average_outputs(const SampleOutputs& outputs);

// Column-wise softmax over rows whose mask entry is false; masked rows are 0.
// Throws TreeError when every row is masked.
Matrix compute_likelihood(const Matrix& averaged, const std::vector<bool>& full_mask);

inline constexpr std::size_t kNoRow = static_cast<std::size_t>(-1);

struct Candidate {
  ClassLabel label = 0;
  std::size_t column = 0;
  std::array<double, 3> value{};  // descending
  std::array<std::size_t, 3> row{kNoRow, kNoRow, kNoRow};
};

// Top-3 unmasked rows per column (ties to the lower row; missing entries are 0
// with row kNoRow), sorted by value[0] descending, then label ascending.
std::vector<Candidate> build_candidates(const Matrix& likelihood, std::span<const ClassLabel> labels,
                                        const std::vector<bool>& full_mask);

struct GrowthConfig {
  double alpha = 0.1;
  double beta = 0.1;
  std::size_t max_children = 10;
  std::size_t max_depth = 2;
  std::uint64_t seed = 0;

  friend bool operator==(const GrowthConfig&, const GrowthConfig&) = default;
};

void validate(const GrowthConfig& config);

// What grow() needs to know about one child of the node being grown.
struct ChildSummary {
  NodeId id = kNoNode;
  bool is_leaf = true;
  std::size_t child_count = 0;
  bool can_deepen = true;  // a leaf may still become a branch under max_depth

  friend bool operator==(const ChildSummary&, const ChildSummary&) = default;
};

// A leaf counts as one child.
std::size_t effective_children(const ChildSummary& child);
bool is_full(const ChildSummary& child, std::size_t max_children);

// True iff node2 is a leaf and node1 has fewer than max_children - 1
// effective children (and, if a leaf, may become a branch).
bool check_for_merge(const ChildSummary& node1, const ChildSummary& node2, std::size_t max_children);

enum class PlacementKind { add_to_child, merge_then_add, new_leaf };

std::string_view to_string(PlacementKind kind);

struct Placement {
  PlacementKind kind = PlacementKind::new_leaf;
  ClassLabel label = 0;
  NodeId target = kNoNode;    // child receiving the class, or the grown node for new_leaf
  NodeId absorbed = kNoNode;  // merge_then_add only
  std::array<double, 3> value{};
  std::array<NodeId, 3> nodes{kNoNode, kNoNode, kNoNode};
  std::string note;

  friend bool operator==(const Placement&, const Placement&) = default;
};

struct PlacementPlan {
  NodeId node = kNoNode;
  std::vector<Placement> actions;

  friend bool operator==(const PlacementPlan&, const PlacementPlan&) = default;
};

struct GrowthInput {
  NodeId node = kNoNode;
  bool is_root = true;                  // the root has no child limit
  std::vector<ChildSummary> children;   // rows of `averaged`, in child order
  std::vector<ClassLabel> new_classes;  // columns of `averaged`
  Matrix averaged;                      // mean child outputs, K x M
};

// Places every new class under the grown node. The merge-direction tie
// (v1 == v2) draws from a stream derived from config.seed and the node id.
PlacementPlan grow(const GrowthInput& input, const GrowthConfig& config);

std::string plan_to_text(const PlacementPlan& plan);
PlacementPlan plan_from_text(std::string_view text);

}  // namespace treecnn
