#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "delaycast/matrix.hpp"
#include "delaycast/rng.hpp"

namespace delaycast::forest {

// Internal nodes route x[feature] < threshold left, everything else right.
// Leaves keep the class counts they were grown from.
struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::size_t count0 = 0;
  std::size_t count1 = 0;
  double probability = 0.0;  // class-1 fraction of the node's rows

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t width = 0;

  const TreeNode& leaf_for(const double* row) const;
  double predict_probability(const double* row) const { return leaf_for(row).probability; }
  std::size_t depth() const;
  bool operator==(const DecisionTree&) const = default;
};

// Gini impurity 1 - p0^2 - p1^2 of a node with the given class counts.
double gini(std::size_t count0, std::size_t count1);

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
};

// Decreases closer than this count as ties.
inline constexpr double kSplitTolerance = 1e-12;

// Best Gini split of `rows` over `candidate_features`, thresholds at midpoints
// between consecutive distinct values. Decrease is
//   gini(parent) - nL/n * gini(left) - nR/n * gini(right).
// Ties go to the lowest feature index, then the lowest threshold. Returns
// nullopt when no split leaves min_samples_leaf rows on both sides with a
// positive decrease.
std::optional<Split> best_split(const Matrix& x, const Labels& y, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features, std::size_t min_samples_leaf = 1);

struct TreeParams {
  std::optional<std::size_t> max_depth;  // unlimited when empty
  std::size_t min_samples_leaf = 1;
  std::size_t features_per_split = 0;    // 0 selects ceil(sqrt(width))
};

std::size_t resolve_features_per_split(std::size_t requested, std::size_t width);

// Grows a tree on `rows` (duplicates allowed, e.g. a bootstrap sample). Each
// node draws a fresh random feature subset: features are visited in random
// order until features_per_split non-constant ones are collected. Throws
// DomainError for an empty row set.
DecisionTree grow_tree(const Matrix& x, const Labels& y, std::span<const std::size_t> rows, const TreeParams& params,
                       Rng& rng);

}  // namespace delaycast::forest
