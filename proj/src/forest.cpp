#include "delaycast/forest.hpp"

#include <atomic>
#include <numeric>
#include <string>
#include <thread>

#include "delaycast/error.hpp"

namespace delaycast::forest {

void ForestParams::validate() const {
  if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
}

RandomForest fit_forest(const Matrix& x, const Labels& y, const ForestParams& params) {
  params.validate();
  if (x.rows() == 0) throw DomainError("cannot fit a forest on an empty matrix");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw ShapeError("row and label counts differ");
  const std::size_t n = y.size();
  const std::size_t width = static_cast<std::size_t>(x.cols());
  resolve_features_per_split(params.features_per_split, width);

  TreeParams tree_params{params.max_depth, params.min_samples_leaf, params.features_per_split};
  RandomForest forest;
  forest.params = params;
  forest.width = width;
  forest.trees.resize(params.n_trees);

  auto grow = [&](std::size_t t) {
    Rng rng(Rng::derive_seed(params.seed, t));
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = rng.uniform_index(n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    forest.trees[t] = grow_tree(x, y, rows, tree_params, rng);
  };

  std::size_t threads = params.threads == 0 ? std::thread::hardware_concurrency() : params.threads;
  threads = std::clamp<std::size_t>(threads, 1, params.n_trees);
  if (threads == 1) {
    for (std::size_t t = 0; t < params.n_trees; ++t) grow(t);
    return forest;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t t; (t = next.fetch_add(1)) < params.n_trees && !failed;) {
          try {
            grow(t);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return forest;
}

Prediction predict_forest(const RandomForest& forest, const Matrix& batch) {
  if (static_cast<std::size_t>(batch.cols()) != forest.width) {
    throw ShapeError("batch width " + std::to_string(batch.cols()) + " does not match forest width " +
                     std::to_string(forest.width));
  }
  if (forest.trees.empty()) throw StateError("forest has no trees");
  const auto rows = static_cast<std::size_t>(batch.rows());
  Prediction out;
  out.classes.resize(rows);
  out.probabilities.resize(rows);
  const double n_trees = static_cast<double>(forest.trees.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = batch.row(static_cast<Eigen::Index>(i)).data();
    double sum = 0.0;
    for (const auto& tree : forest.trees) {
      const double p = tree.predict_probability(row);
      sum += forest.params.vote == Vote::Soft ? p : (p >= 0.5 ? 1.0 : 0.0);
    }
    out.probabilities[i] = sum / n_trees;
    out.classes[i] = out.probabilities[i] >= 0.5 ? 1 : 0;
  }
  return out;
}

}  // namespace delaycast::forest
