#include "delaycast/decision_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "delaycast/error.hpp"

namespace delaycast::forest {
namespace {

bool better(double decrease, std::size_t feature, double threshold, const Split& best) {
  if (decrease > best.impurity_decrease + kSplitTolerance) return true;
  if (decrease < best.impurity_decrease - kSplitTolerance) return false;
  if (feature != best.feature) return feature < best.feature;
  return threshold < best.threshold;
}

bool constant_feature(const Matrix& x, std::span<const std::size_t> rows, std::size_t feature) {
  const auto f = static_cast<Eigen::Index>(feature);
  const double first = x(static_cast<Eigen::Index>(rows[0]), f);
  return std::all_of(rows.begin(), rows.end(),
                     [&](std::size_t r) { return x(static_cast<Eigen::Index>(r), f) == first; });
}

}  // namespace

double gini(std::size_t count0, std::size_t count1) {
  const double n = static_cast<double>(count0 + count1);
  if (n == 0.0) return 0.0;
  const double p0 = static_cast<double>(count0) / n;
  const double p1 = static_cast<double>(count1) / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

const TreeNode& DecisionTree::leaf_for(const double* row) const {
  const TreeNode* node = &nodes[0];
  while (!node->is_leaf()) {
    node = &nodes[static_cast<std::size_t>(row[node->feature] < node->threshold ? node->left : node->right)];
  }
  return *node;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

std::optional<Split> best_split(const Matrix& x, const Labels& y, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features, std::size_t min_samples_leaf) {
  const std::size_t n = rows.size();
  if (n < 2) return std::nullopt;
  std::size_t total1 = 0;
  for (auto r : rows) total1 += y[r];
  const std::size_t total0 = n - total1;
  const double parent = gini(total0, total1);
  if (parent == 0.0) return std::nullopt;

  const std::size_t min_leaf = std::max<std::size_t>(min_samples_leaf, 1);
  Split best;
  bool found = false;
  std::vector<std::pair<double, std::uint8_t>> column(n);

  for (auto feature : candidate_features) {
    const auto f = static_cast<Eigen::Index>(feature);
    for (std::size_t i = 0; i < n; ++i) column[i] = {x(static_cast<Eigen::Index>(rows[i]), f), y[rows[i]]};
    std::sort(column.begin(), column.end());

    std::size_t left0 = 0, left1 = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      (column[i].second ? left1 : left0) += 1;
      if (column[i].first == column[i + 1].first) continue;
      const std::size_t n_left = i + 1;
      const std::size_t n_right = n - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;

      const double lo = column[i].first;
      const double hi = column[i + 1].first;
      double threshold = lo + (hi - lo) / 2.0;
      if (!(threshold > lo)) threshold = hi;  // adjacent doubles

      const double decrease = parent - static_cast<double>(n_left) / static_cast<double>(n) * gini(left0, left1) -
                              static_cast<double>(n_right) / static_cast<double>(n) *
                                  gini(total0 - left0, total1 - left1);
      if (decrease <= kSplitTolerance) continue;
      if (!found || better(decrease, feature, threshold, best)) {
        best = {feature, threshold, decrease};
        found = true;
      }
    }
  }
  if (!found) return std::nullopt;
  return best;
}

std::size_t resolve_features_per_split(std::size_t requested, std::size_t width) {
  if (width == 0) throw DomainError("matrix has no features");
  if (requested == 0) return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(width))));
  if (requested > width) {
    throw DomainError("features_per_split " + std::to_string(requested) + " exceeds feature count " +
                      std::to_string(width));
  }
  return requested;
}

DecisionTree grow_tree(const Matrix& x, const Labels& y, std::span<const std::size_t> rows, const TreeParams& params,
                       Rng& rng) {
  if (rows.empty()) throw DomainError("cannot grow a tree on zero rows");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw ShapeError("row and label counts differ");
  const std::size_t width = static_cast<std::size_t>(x.cols());
  const std::size_t k = resolve_features_per_split(params.features_per_split, width);
  const std::size_t min_leaf = std::max<std::size_t>(params.min_samples_leaf, 1);

  DecisionTree tree;
  tree.width = width;

  struct Pending {
    std::size_t node;
    std::vector<std::size_t> rows;
    std::size_t depth;
  };
  std::vector<Pending> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, std::vector<std::size_t>(rows.begin(), rows.end()), 0});

  std::vector<std::size_t> features(width);
  std::iota(features.begin(), features.end(), std::size_t{0});

  while (!stack.empty()) {
    Pending work = std::move(stack.back());
    stack.pop_back();

    std::size_t c1 = 0;
    for (auto r : work.rows) c1 += y[r];
    const std::size_t c0 = work.rows.size() - c1;
    {
      TreeNode& node = tree.nodes[work.node];
      node.count0 = c0;
      node.count1 = c1;
      node.probability = static_cast<double>(c1) / static_cast<double>(work.rows.size());
    }

    const bool depth_exhausted = params.max_depth && work.depth >= *params.max_depth;
    if (depth_exhausted || c0 == 0 || c1 == 0 || work.rows.size() < 2 * min_leaf) continue;

    // Partial Fisher-Yates over the feature list, skipping constant features.
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < width && candidates.size() < k; ++i) {
      std::swap(features[i], features[i + rng.uniform_index(width - i)]);
      if (!constant_feature(x, work.rows, features[i])) candidates.push_back(features[i]);
    }
    std::sort(candidates.begin(), candidates.end());
    const auto split = best_split(x, y, work.rows, candidates, min_leaf);
    if (!split) continue;

    std::vector<std::size_t> left_rows, right_rows;
    const auto f = static_cast<Eigen::Index>(split->feature);
    for (auto r : work.rows) {
      (x(static_cast<Eigen::Index>(r), f) < split->threshold ? left_rows : right_rows).push_back(r);
    }
    const auto left = tree.nodes.size();
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[work.node];
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->threshold;
    node.left = static_cast<int>(left);
    node.right = static_cast<int>(left + 1);
    // Right pushed first so the left subtree is expanded next.
    stack.push_back({left + 1, std::move(right_rows), work.depth + 1});
    stack.push_back({left, std::move(left_rows), work.depth + 1});
  }
  return tree;
}

}  // namespace delaycast::forest
