#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "delaycast/decision_tree.hpp"
#include "delaycast/matrix.hpp"

namespace delaycast::forest {

// Soft averages leaf probabilities (needed for ROC curves); Hard counts
// per-tree class votes.
enum class Vote { Soft, Hard };

struct ForestParams {
  std::size_t n_trees = 200;
  std::optional<std::size_t> max_depth;
  std::size_t min_samples_leaf = 1;
  std::size_t features_per_split = 0;  // 0 selects ceil(sqrt(width))
  bool bootstrap = true;
  Vote vote = Vote::Soft;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // 0 uses every hardware thread

  void validate() const;
};

struct RandomForest {
  std::vector<DecisionTree> trees;
  ForestParams params;
  std::size_t width = 0;
};

// Tree t uses its own stream Rng::derive_seed(seed, t) for both the bootstrap
// draw and feature sampling, so the result does not depend on threading.
RandomForest fit_forest(const Matrix& x, const Labels& y, const ForestParams& params);

struct Prediction {
  Labels classes;
  std::vector<double> probabilities;  // class-1 probability per row
};

// class = 1 iff probability >= 0.5. Throws ShapeError on a width mismatch.
Prediction predict_forest(const RandomForest& forest, const Matrix& batch);

}  // namespace delaycast::forest
