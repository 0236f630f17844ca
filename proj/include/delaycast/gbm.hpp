#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "delaycast/matrix.hpp"

namespace delaycast::gbm {

enum class LossKind { Logistic };

struct GbmParams {
  std::size_t n_rounds = 200;
  std::size_t max_depth = 6;
  double learning_rate = 0.1;  // shrinkage applied to every tree's output
  double lambda = 1.0;         // L2 penalty on leaf weights
  double gamma = 0.0;          // penalty per leaf
  double min_child_hessian = 1.0;
  double base_score = 0.5;
  LossKind loss = LossKind::Logistic;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GradHess {
  double gradient = 0.0;
  double hessian = 0.0;
};

// First and second derivative of the logistic loss with respect to the
// margin, expressed through the predicted probability.
GradHess grad_hess_logistic(double probability, std::uint8_t label);

// Minimizer -G / (H + lambda) of G*w + (H + lambda)*w^2/2. Throws DomainError
// when H + lambda <= 0.
double leaf_weight(double grad_sum, double hess_sum, double lambda);

// Reduction of the regularized objective from splitting one leaf in two:
//   1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma
double split_gain(double grad_left, double hess_left, double grad_right, double hess_right, double lambda,
                  double gamma);

// Leaf contribution -1/2 G^2 / (H + lambda) to the regularized objective.
double leaf_objective(double grad_sum, double hess_sum, double lambda);

struct RegressionNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;    // leaf weight (log-odds increment before shrinkage)
  double grad_sum = 0.0;  // G of the node's rows
  double hess_sum = 0.0;  // H of the node's rows
  double gain = 0.0;      // split gain, internal nodes only

  bool is_leaf() const { return feature < 0; }
  bool operator==(const RegressionNode&) const = default;
};

struct RegressionTree {
  std::vector<RegressionNode> nodes;

  double predict(const double* row) const;
  std::size_t leaf_count() const;
  bool operator==(const RegressionTree&) const = default;
};

struct GbmSplit {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

// Gains within this distance are ties; a split is accepted only when its
// gain exceeds it.
inline constexpr double kGainTolerance = 1e-12;

// Exact greedy search over every feature and every midpoint between
// consecutive distinct values. Both children must reach min_child_hessian.
// Ties go to the lowest feature, then the lowest threshold.
std::optional<GbmSplit> best_gbm_split(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                                       std::span<const std::size_t> rows, const GbmParams& params);

// Row indices of each feature column in ascending value order (ties by row).
struct ColumnOrder {
  std::vector<std::vector<std::size_t>> sorted_rows;

  static ColumnOrder build(const Matrix& x);
};

// Grows one tree level by level: every level scans each presorted column once
// and evaluates all frontier nodes together. Chooses the same split as
// best_gbm_split on every node's rows.
RegressionTree grow_regression_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                                    const GbmParams& params, const ColumnOrder* order = nullptr);

struct GbmModel {
  double initial_logit = 0.0;
  std::vector<RegressionTree> trees;
  GbmParams params;
  std::size_t width = 0;

  // initial_logit + learning_rate * sum of tree outputs
  double margin(const double* row) const;
};

// `loss_trace`, when given, receives the mean training BCE before the first
// round and after every round. Throws DivergenceError on non-finite margins.
GbmModel fit_gbm(const Matrix& x, const Labels& y, const GbmParams& params,
                 std::vector<double>* loss_trace = nullptr);

std::vector<double> predict_gbm(const GbmModel& model, const Matrix& batch);

}  // namespace delaycast::gbm
