#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "delaycast/error.hpp"
#include "delaycast/gbm.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace delaycast;
using namespace delaycast::gbm;

namespace {

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

const Matrix kStumpX{{1.0}, {2.0}, {8.0}, {9.0}};
const Labels kStumpY = {0, 0, 1, 1};

GbmParams stump_params() {
  GbmParams p;
  p.n_rounds = 1;
  p.max_depth = 1;
  p.lambda = 1.0;
  p.gamma = 0.0;
  p.base_score = 0.5;
  p.learning_rate = 1.0;
  // each side of the stump carries H = 0.5, below the default of 1
  p.min_child_hessian = 0.0;
  return p;
}

// Walks a grown tree and checks every internal node against the exhaustive
// oracle on exactly the rows that reach it.
void check_tree_against_oracle(const RegressionTree& tree, std::size_t node, const Matrix& x,
                               const std::vector<double>& g, const std::vector<double>& h,
                               const std::vector<std::size_t>& rows, const GbmParams& p, std::size_t depth) {
  const auto& n = tree.nodes[node];
  const auto oracle = testsupport::brute_gbm_split(x, g, h, rows, p);
  const bool can_split = depth < p.max_depth && rows.size() >= 2;
  if (n.is_leaf()) {
    EXPECT_TRUE(!can_split || !oracle.has_value()) << "leaf where oracle splits at depth " << depth;
    return;
  }
  ASSERT_TRUE(oracle.has_value());
  EXPECT_EQ(static_cast<std::size_t>(n.feature), oracle->feature);
  EXPECT_EQ(n.threshold, oracle->threshold);
  EXPECT_NEAR(n.gain, oracle->score, 1e-9);
  std::vector<std::size_t> left, right;
  for (auto r : rows) (x(static_cast<Eigen::Index>(r), n.feature) < n.threshold ? left : right).push_back(r);
  check_tree_against_oracle(tree, static_cast<std::size_t>(n.left), x, g, h, left, p, depth + 1);
  check_tree_against_oracle(tree, static_cast<std::size_t>(n.right), x, g, h, right, p, depth + 1);
}

}  // namespace

TEST(Formulas, GradHess) {
  auto gh = grad_hess_logistic(0.5, 1);
  EXPECT_DOUBLE_EQ(gh.gradient, -0.5);
  EXPECT_DOUBLE_EQ(gh.hessian, 0.25);
  gh = grad_hess_logistic(0.9, 0);
  EXPECT_DOUBLE_EQ(gh.gradient, 0.9);
  EXPECT_NEAR(gh.hessian, 0.09, 1e-15);
  EXPECT_NEAR(grad_hess_logistic(1.0 - 1e-12, 1).gradient, 0.0, 1e-11);
}

TEST(Formulas, LeafWeight) {
  EXPECT_EQ(leaf_weight(0.0, 3.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(leaf_weight(2.0, 3.0, 1.0), -0.5);
  EXPECT_LT(std::abs(leaf_weight(2.0, 3.0, 1e12)), 1e-11);
  EXPECT_THROW(leaf_weight(1.0, 0.0, 0.0), DomainError);
  // numeric minimizer of G w + (H + l) w^2 / 2
  double best_w = 0.0, best = 1e300;
  for (double w = -2.0; w <= 2.0; w += 1e-4) {
    const double v = 2.0 * w + 0.5 * 4.0 * w * w;
    if (v < best) {
      best = v;
      best_w = w;
    }
  }
  EXPECT_NEAR(best_w, -0.5, 1e-4);
}

TEST(Formulas, RegularizationShrinksWeights) {
  double prev = 1e300;
  for (double lambda : {0.0, 0.5, 1.0, 4.0, 100.0}) {
    const double w = std::abs(leaf_weight(-3.0, 2.0, lambda));
    EXPECT_LE(w, prev);
    prev = w;
  }
}

TEST(Formulas, SplitGain) {
  EXPECT_DOUBLE_EQ(split_gain(2, 3, -2, 3, 1, 0), 1.0);
  EXPECT_DOUBLE_EQ(split_gain(2, 3, -2, 3, 1, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(split_gain(0, 3, 0, 3, 1, 0.7), -0.7);
  // objective difference
  const double before = leaf_objective(0, 6, 1);
  const double after = leaf_objective(2, 3, 1) + leaf_objective(-2, 3, 1);
  EXPECT_DOUBLE_EQ(before - after, split_gain(2, 3, -2, 3, 1, 0));
}

TEST(Stump, HandComputedExample) {
  std::vector<double> trace;
  const auto model = fit_gbm(kStumpX, kStumpY, stump_params(), &trace);
  EXPECT_EQ(model.initial_logit, 0.0);
  ASSERT_EQ(model.trees.size(), 1u);
  const auto& tree = model.trees[0];
  ASSERT_EQ(tree.nodes.size(), 3u);
  EXPECT_EQ(tree.nodes[0].feature, 0);
  EXPECT_EQ(tree.nodes[0].threshold, 5.0);
  const double w = 1.0 / 1.5;
  EXPECT_DOUBLE_EQ(tree.nodes[1].weight, -w);
  EXPECT_DOUBLE_EQ(tree.nodes[2].weight, w);
  const auto p = predict_gbm(model, kStumpX);
  EXPECT_NEAR(p[0], 0.3392, 1e-4);
  EXPECT_NEAR(p[3], 0.6608, 1e-4);
  EXPECT_LT(trace[1], trace[0]);
}

TEST(Stump, DefaultMinChildHessianBlocksIt) {
  auto p = stump_params();
  p.min_child_hessian = 1.0;
  const auto model = fit_gbm(kStumpX, kStumpY, p);
  EXPECT_EQ(model.trees[0].nodes.size(), 1u);
}

TEST(Predict, ZeroRoundsGiveBaseScore) {
  GbmParams p;
  p.n_rounds = 0;
  p.base_score = 0.3;
  const auto model = fit_gbm(kStumpX, kStumpY, p);
  for (double v : predict_gbm(model, kStumpX)) EXPECT_NEAR(v, 0.3, 1e-15);
  EXPECT_THROW(predict_gbm(model, Matrix::Zero(1, 2)), ShapeError);
}

TEST(Grower, MatchesPerNodeReference) {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const auto d = testsupport::blobs(60, 3, 1.5, rng.next());
    std::vector<double> g(60), h(60);
    for (std::size_t i = 0; i < 60; ++i) {
      const double prob = rng.uniform(0.05, 0.95);
      const auto gh = grad_hess_logistic(prob, d.y[i]);
      g[i] = gh.gradient;
      h[i] = gh.hessian;
    }
    GbmParams p;
    p.max_depth = 3;
    p.min_child_hessian = 0.5;
    const auto tree = grow_regression_tree(d.x, g, h, p);
    // root from the reference search
    const auto root = best_gbm_split(d.x, g, h, all_rows(60), p);
    ASSERT_EQ(root.has_value(), !tree.nodes[0].is_leaf());
    if (root) {
      EXPECT_EQ(static_cast<std::size_t>(tree.nodes[0].feature), root->feature);
      EXPECT_EQ(tree.nodes[0].threshold, root->threshold);
    }
    check_tree_against_oracle(tree, 0, d.x, g, h, all_rows(60), p, 0);
  }
}

TEST(Grower, ExhaustiveOracleOnTinySets) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(7);
    const std::size_t d = 1 + rng.uniform_index(2);
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::vector<double> g(n), h(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = static_cast<double>(rng.uniform_index(4));
      }
      const auto gh = grad_hess_logistic(rng.uniform(0.05, 0.95), static_cast<std::uint8_t>(rng.uniform_index(2)));
      g[r] = gh.gradient;
      h[r] = gh.hessian;
    }
    GbmParams p;
    p.max_depth = 2;
    p.min_child_hessian = rng.uniform01() < 0.5 ? 0.0 : 0.2;
    p.lambda = rng.uniform(0.0, 2.0);
    p.gamma = rng.uniform01() < 0.3 ? 0.05 : 0.0;
    const auto tree = grow_regression_tree(x, g, h, p);
    check_tree_against_oracle(tree, 0, x, g, h, all_rows(n), p, 0);
  }
}

TEST(Grower, ObjectiveConsistency) {
  const auto d = testsupport::blobs(200, 4, 1.0, 7);
  std::vector<double> g(200), h(200);
  for (std::size_t i = 0; i < 200; ++i) {
    const auto gh = grad_hess_logistic(0.5, d.y[i]);
    g[i] = gh.gradient;
    h[i] = gh.hessian;
  }
  GbmParams p;
  p.gamma = 0.1;
  p.max_depth = 4;
  const auto tree = grow_regression_tree(d.x, g, h, p);
  ASSERT_GT(tree.nodes.size(), 1u);
  for (const auto& n : tree.nodes) {
    if (n.is_leaf()) {
      EXPECT_DOUBLE_EQ(n.weight, leaf_weight(n.grad_sum, n.hess_sum, p.lambda));
      continue;
    }
    const auto& l = tree.nodes[static_cast<std::size_t>(n.left)];
    const auto& r = tree.nodes[static_cast<std::size_t>(n.right)];
    const double before = leaf_objective(n.grad_sum, n.hess_sum, p.lambda) + p.gamma;
    const double after = leaf_objective(l.grad_sum, l.hess_sum, p.lambda) +
                         leaf_objective(r.grad_sum, r.hess_sum, p.lambda) + 2 * p.gamma;
    EXPECT_NEAR(before - after, n.gain, 1e-9);
    EXPECT_GE(l.hess_sum, p.min_child_hessian);
    EXPECT_GE(r.hess_sum, p.min_child_hessian);
  }
}

TEST(Fit, LossNonIncreasingAtSmallRate) {
  const auto d = testsupport::concentric_circles(400, 0.1, 0.5, 1, 8);
  for (double eta : {0.05, 0.1, 0.3}) {
    GbmParams p;
    p.n_rounds = 40;
    p.max_depth = 3;
    p.learning_rate = eta;
    std::vector<double> trace;
    fit_gbm(d.x, d.y, p, &trace);
    ASSERT_EQ(trace.size(), 41u);
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-12) << "eta " << eta;
  }
}

TEST(Fit, DeterministicAndLearns) {
  const auto d = testsupport::concentric_circles(400, 0.1, 0.5, 0, 9);
  GbmParams p;
  p.n_rounds = 30;
  const auto a = fit_gbm(d.x, d.y, p);
  const auto b = fit_gbm(d.x, d.y, p);
  EXPECT_EQ(a.trees, b.trees);
  const auto probs = predict_gbm(a, d.x);
  EXPECT_EQ(probs, predict_gbm(a, d.x));
  std::size_t ok = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) ok += (probs[i] >= 0.5) == (d.y[i] == 1);
  EXPECT_GT(ok, 380u);
}

TEST(Fit, InvalidParams) {
  GbmParams p;
  p.lambda = -1;
  EXPECT_THROW(fit_gbm(kStumpX, kStumpY, p), ConfigError);
  p = {};
  p.base_score = 1.0;
  EXPECT_THROW(fit_gbm(kStumpX, kStumpY, p), ConfigError);
  p = {};
  p.learning_rate = 0.0;
  EXPECT_THROW(fit_gbm(kStumpX, kStumpY, p), ConfigError);
}
