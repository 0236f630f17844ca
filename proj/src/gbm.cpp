#include "delaycast/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "delaycast/error.hpp"

namespace delaycast::gbm {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double mean_bce(const std::vector<double>& margins, const Labels& y) {
  constexpr double eps = 1e-7;
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = std::clamp(sigmoid(margins[i]), eps, 1.0 - eps);
    sum -= y[i] ? std::log(p) : std::log(1.0 - p);
  }
  return sum / static_cast<double>(y.size());
}

bool better(double gain, std::size_t feature, double threshold, const GbmSplit& best) {
  if (gain > best.gain + kGainTolerance) return true;
  if (gain < best.gain - kGainTolerance) return false;
  if (feature != best.feature) return feature < best.feature;
  return threshold < best.threshold;
}

}  // namespace

void GbmParams::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate must lie in (0, 1]");
  if (!(base_score > 0.0 && base_score < 1.0)) throw ConfigError("base_score must lie in (0, 1)");
  if (!(min_child_hessian >= 0.0)) throw ConfigError("min_child_hessian must be >= 0");
}

GradHess grad_hess_logistic(double probability, std::uint8_t label) {
  return {probability - static_cast<double>(label), probability * (1.0 - probability)};
}

double leaf_weight(double grad_sum, double hess_sum, double lambda) {
  const double denom = hess_sum + lambda;
  if (!(denom > 0.0)) throw DomainError("leaf weight undefined: H + lambda must be > 0");
  return -grad_sum / denom;
}

double leaf_objective(double grad_sum, double hess_sum, double lambda) {
  const double denom = hess_sum + lambda;
  if (!(denom > 0.0)) throw DomainError("leaf objective undefined: H + lambda must be > 0");
  return -0.5 * grad_sum * grad_sum / denom;
}

double split_gain(double grad_left, double hess_left, double grad_right, double hess_right, double lambda,
                  double gamma) {
  if (!(hess_left + lambda > 0.0) || !(hess_right + lambda > 0.0)) {
    throw DomainError("split gain undefined: H + lambda must be > 0 in both children");
  }
  const double g = grad_left + grad_right;
  const double h = hess_left + hess_right;
  return 0.5 * (grad_left * grad_left / (hess_left + lambda) + grad_right * grad_right / (hess_right + lambda) -
                g * g / (h + lambda)) -
         gamma;
}

double RegressionTree::predict(const double* row) const {
  const RegressionNode* node = &nodes[0];
  while (!node->is_leaf()) {
    node = &nodes[static_cast<std::size_t>(row[node->feature] < node->threshold ? node->left : node->right)];
  }
  return node->weight;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const RegressionNode& n) { return n.is_leaf(); }));
}

std::optional<GbmSplit> best_gbm_split(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                                       std::span<const std::size_t> rows, const GbmParams& params) {
  const std::size_t n = rows.size();
  if (n < 2) return std::nullopt;
  double g_total = 0.0, h_total = 0.0;
  for (auto r : rows) {
    g_total += grad[r];
    h_total += hess[r];
  }

  GbmSplit best;
  bool found = false;
  struct Entry {
    double value;
    double g;
    double h;
  };
  std::vector<Entry> column(n);
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    for (std::size_t i = 0; i < n; ++i) column[i] = {x(static_cast<Eigen::Index>(rows[i]), f), grad[rows[i]], hess[rows[i]]};
    std::stable_sort(column.begin(), column.end(), [](const Entry& a, const Entry& b) { return a.value < b.value; });

    double g_left = 0.0, h_left = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      g_left += column[i].g;
      h_left += column[i].h;
      if (column[i].value == column[i + 1].value) continue;
      const double g_right = g_total - g_left;
      const double h_right = h_total - h_left;
      if (h_left < params.min_child_hessian || h_right < params.min_child_hessian) continue;

      const double lo = column[i].value;
      const double hi = column[i + 1].value;
      double threshold = lo + (hi - lo) / 2.0;
      if (!(threshold > lo)) threshold = hi;

      const double gain = split_gain(g_left, h_left, g_right, h_right, params.lambda, params.gamma);
      if (!(gain > kGainTolerance)) continue;
      const auto feature = static_cast<std::size_t>(f);
      if (!found || better(gain, feature, threshold, best)) {
        best = {feature, threshold, gain};
        found = true;
      }
    }
  }
  if (!found) return std::nullopt;
  return best;
}

ColumnOrder ColumnOrder::build(const Matrix& x) {
  ColumnOrder order;
  order.sorted_rows.resize(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& rows = order.sorted_rows[static_cast<std::size_t>(f)];
    rows.resize(static_cast<std::size_t>(x.rows()));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      return x(static_cast<Eigen::Index>(a), f) < x(static_cast<Eigen::Index>(b), f);
    });
  }
  return order;
}

RegressionTree grow_regression_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                                    const GbmParams& params, const ColumnOrder* order) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  if (n == 0) throw DomainError("cannot grow a tree on zero rows");
  if (grad.size() != n || hess.size() != n) throw ShapeError("gradient count does not match row count");
  ColumnOrder local;
  if (order == nullptr) {
    local = ColumnOrder::build(x);
    order = &local;
  }

  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<int> node_of(n, 0);  // -1 once the row sits in a finished leaf
  std::vector<std::size_t> frontier{0};

  // Per-frontier-node scan state.
  struct Scan {
    double g_left = 0.0;
    double h_left = 0.0;
    double last_value = 0.0;
    bool seen = false;
  };

  for (std::size_t depth = 0; !frontier.empty(); ++depth) {
    std::vector<int> slot(tree.nodes.size(), -1);
    for (std::size_t k = 0; k < frontier.size(); ++k) slot[frontier[k]] = static_cast<int>(k);

    // Node totals, accumulated in row order like best_gbm_split does.
    std::vector<double> g_total(frontier.size(), 0.0), h_total(frontier.size(), 0.0);
    std::vector<std::size_t> count(frontier.size(), 0);
    for (std::size_t r = 0; r < n; ++r) {
      if (node_of[r] < 0) continue;
      const auto k = static_cast<std::size_t>(slot[static_cast<std::size_t>(node_of[r])]);
      g_total[k] += grad[r];
      h_total[k] += hess[r];
      ++count[k];
    }
    for (std::size_t k = 0; k < frontier.size(); ++k) {
      RegressionNode& node = tree.nodes[frontier[k]];
      node.grad_sum = g_total[k];
      node.hess_sum = h_total[k];
      node.weight = leaf_weight(g_total[k], h_total[k], params.lambda);
    }

    std::vector<std::optional<GbmSplit>> best(frontier.size());
    if (depth < params.max_depth) {
      std::vector<Scan> scan(frontier.size());
      for (std::size_t f = 0; f < order->sorted_rows.size(); ++f) {
        std::fill(scan.begin(), scan.end(), Scan{});
        const auto col = static_cast<Eigen::Index>(f);
        for (auto r : order->sorted_rows[f]) {
          if (node_of[r] < 0) continue;
          const auto k = static_cast<std::size_t>(slot[static_cast<std::size_t>(node_of[r])]);
          Scan& s = scan[k];
          const double value = x(static_cast<Eigen::Index>(r), col);
          if (s.seen && value != s.last_value) {
            const double g_right = g_total[k] - s.g_left;
            const double h_right = h_total[k] - s.h_left;
            if (s.h_left >= params.min_child_hessian && h_right >= params.min_child_hessian) {
              double threshold = s.last_value + (value - s.last_value) / 2.0;
              if (!(threshold > s.last_value)) threshold = value;
              const double gain = split_gain(s.g_left, s.h_left, g_right, h_right, params.lambda, params.gamma);
              if (gain > kGainTolerance && (!best[k] || better(gain, f, threshold, *best[k]))) {
                best[k] = GbmSplit{f, threshold, gain};
              }
            }
          }
          s.g_left += grad[r];
          s.h_left += hess[r];
          s.last_value = value;
          s.seen = true;
        }
      }
    }

    std::vector<std::size_t> next;
    std::vector<int> child_of(frontier.size(), -1);
    for (std::size_t k = 0; k < frontier.size(); ++k) {
      if (!best[k] || count[k] < 2) continue;
      const auto left = tree.nodes.size();
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      RegressionNode& node = tree.nodes[frontier[k]];
      node.feature = static_cast<int>(best[k]->feature);
      node.threshold = best[k]->threshold;
      node.left = static_cast<int>(left);
      node.right = static_cast<int>(left + 1);
      node.gain = best[k]->gain;
      node.weight = 0.0;
      child_of[k] = static_cast<int>(left);
      next.push_back(left);
      next.push_back(left + 1);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (node_of[r] < 0) continue;
      const auto k = static_cast<std::size_t>(slot[static_cast<std::size_t>(node_of[r])]);
      if (child_of[k] < 0) {
        node_of[r] = -1;
        continue;
      }
      const RegressionNode& node = tree.nodes[frontier[k]];
      node_of[r] = x(static_cast<Eigen::Index>(r), node.feature) < node.threshold ? node.left : node.right;
    }
    frontier = std::move(next);
  }
  return tree;
}

double GbmModel::margin(const double* row) const {
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.predict(row);
  return initial_logit + params.learning_rate * sum;
}

GbmModel fit_gbm(const Matrix& x, const Labels& y, const GbmParams& params, std::vector<double>* loss_trace) {
  params.validate();
  if (x.rows() == 0) throw DomainError("cannot fit boosted trees on an empty matrix");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw ShapeError("row and label counts differ");

  GbmModel model;
  model.params = params;
  model.width = static_cast<std::size_t>(x.cols());
  model.initial_logit = std::log(params.base_score / (1.0 - params.base_score));

  const std::size_t n = y.size();
  std::vector<double> margins(n, model.initial_logit);
  std::vector<double> grad(n), hess(n);
  const ColumnOrder order = ColumnOrder::build(x);
  if (loss_trace) loss_trace->assign(1, mean_bce(margins, y));

  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto gh = grad_hess_logistic(sigmoid(margins[i]), y[i]);
      grad[i] = gh.gradient;
      hess[i] = gh.hessian;
    }
    RegressionTree tree = grow_regression_tree(x, grad, hess, params, &order);
    for (std::size_t i = 0; i < n; ++i) {
      margins[i] += params.learning_rate * tree.predict(x.row(static_cast<Eigen::Index>(i)).data());
      if (!std::isfinite(margins[i])) {
        throw DivergenceError("boosting diverged: non-finite margin in round " + std::to_string(round + 1));
      }
    }
    model.trees.push_back(std::move(tree));
    if (loss_trace) loss_trace->push_back(mean_bce(margins, y));
  }
  return model;
}

std::vector<double> predict_gbm(const GbmModel& model, const Matrix& batch) {
  if (static_cast<std::size_t>(batch.cols()) != model.width) {
    throw ShapeError("batch width " + std::to_string(batch.cols()) + " does not match model width " +
                     std::to_string(model.width));
  }
  std::vector<double> out(static_cast<std::size_t>(batch.rows()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid(model.margin(batch.row(static_cast<Eigen::Index>(i)).data()));
  return out;
}

}  // namespace delaycast::gbm
