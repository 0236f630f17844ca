#include "delaycast/tree_io.hpp"

#include "delaycast/error.hpp"

namespace delaycast::tree_io {
namespace {

template <typename T>
std::vector<T> column(const nlohmann::json& nodes, const char* name, std::size_t expected) {
  auto values = nodes.at(name).get<std::vector<T>>();
  if (values.size() != expected) throw DataError(std::string("tree document: column '") + name + "' has wrong length");
  return values;
}

// Child indices must point forward into the array so routing terminates.
void check_links(const std::vector<int>& feature, const std::vector<int>& left, const std::vector<int>& right) {
  const auto n = static_cast<int>(feature.size());
  if (n == 0) throw DataError("tree document: no nodes");
  for (int i = 0; i < n; ++i) {
    if (feature[static_cast<std::size_t>(i)] < 0) continue;
    const int l = left[static_cast<std::size_t>(i)];
    const int r = right[static_cast<std::size_t>(i)];
    if (l <= i || r <= i || l >= n || r >= n) throw DataError("tree document: invalid child index");
  }
}

template <typename F>
auto parse(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed ") + what + " document: " + e.what());
  }
}

}  // namespace

nlohmann::json to_json(const forest::DecisionTree& tree) {
  std::vector<int> feature, left, right;
  std::vector<double> threshold, probability;
  std::vector<std::size_t> count0, count1;
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    count0.push_back(n.count0);
    count1.push_back(n.count1);
    probability.push_back(n.probability);
  }
  return {{"width", tree.width},
          {"nodes",
           {{"feature", feature},
            {"threshold", threshold},
            {"left", left},
            {"right", right},
            {"count0", count0},
            {"count1", count1},
            {"probability", probability}}}};
}

forest::DecisionTree decision_tree_from_json(const nlohmann::json& j) {
  return parse("tree", [&] {
    const auto& nodes = j.at("nodes");
    const auto feature = nodes.at("feature").get<std::vector<int>>();
    const std::size_t n = feature.size();
    const auto threshold = column<double>(nodes, "threshold", n);
    const auto left = column<int>(nodes, "left", n);
    const auto right = column<int>(nodes, "right", n);
    const auto count0 = column<std::size_t>(nodes, "count0", n);
    const auto count1 = column<std::size_t>(nodes, "count1", n);
    const auto probability = column<double>(nodes, "probability", n);
    check_links(feature, left, right);
    forest::DecisionTree tree;
    tree.width = j.at("width").get<std::size_t>();
    for (std::size_t i = 0; i < n; ++i) {
      if (feature[i] >= static_cast<int>(tree.width)) throw DataError("tree document: feature index out of range");
      tree.nodes.push_back({feature[i], threshold[i], left[i], right[i], count0[i], count1[i], probability[i]});
    }
    return tree;
  });
}

nlohmann::json to_json(const forest::RandomForest& forest) {
  const auto& p = forest.params;
  nlohmann::json params = {{"n_trees", p.n_trees},
                           {"min_samples_leaf", p.min_samples_leaf},
                           {"features_per_split", p.features_per_split},
                           {"bootstrap", p.bootstrap},
                           {"vote", p.vote == forest::Vote::Soft ? "soft" : "hard"},
                           {"seed", p.seed}};
  params["max_depth"] = p.max_depth ? nlohmann::json(*p.max_depth) : nlohmann::json(nullptr);
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : forest.trees) trees.push_back(to_json(t));
  return {{"format", "delaycast.forest"}, {"version", 1}, {"width", forest.width}, {"params", params}, {"trees", trees}};
}

forest::RandomForest forest_from_json(const nlohmann::json& j) {
  return parse("forest", [&] {
    if (j.at("format") != "delaycast.forest" || j.at("version") != 1) throw DataError("not a version-1 forest document");
    forest::RandomForest f;
    f.width = j.at("width").get<std::size_t>();
    const auto& p = j.at("params");
    f.params.n_trees = p.at("n_trees").get<std::size_t>();
    f.params.min_samples_leaf = p.at("min_samples_leaf").get<std::size_t>();
    f.params.features_per_split = p.at("features_per_split").get<std::size_t>();
    f.params.bootstrap = p.at("bootstrap").get<bool>();
    f.params.vote = p.at("vote") == "hard" ? forest::Vote::Hard : forest::Vote::Soft;
    f.params.seed = p.at("seed").get<std::uint64_t>();
    if (!p.at("max_depth").is_null()) f.params.max_depth = p.at("max_depth").get<std::size_t>();
    for (const auto& t : j.at("trees")) {
      f.trees.push_back(decision_tree_from_json(t));
      if (f.trees.back().width != f.width) throw DataError("forest document: tree width mismatch");
    }
    return f;
  });
}

nlohmann::json to_json(const gbm::RegressionTree& tree) {
  std::vector<int> feature, left, right;
  std::vector<double> threshold, weight, grad_sum, hess_sum, gain;
  for (const auto& n : tree.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    weight.push_back(n.weight);
    grad_sum.push_back(n.grad_sum);
    hess_sum.push_back(n.hess_sum);
    gain.push_back(n.gain);
  }
  return {{"nodes",
           {{"feature", feature},
            {"threshold", threshold},
            {"left", left},
            {"right", right},
            {"weight", weight},
            {"grad_sum", grad_sum},
            {"hess_sum", hess_sum},
            {"gain", gain}}}};
}

gbm::RegressionTree regression_tree_from_json(const nlohmann::json& j) {
  return parse("tree", [&] {
    const auto& nodes = j.at("nodes");
    const auto feature = nodes.at("feature").get<std::vector<int>>();
    const std::size_t n = feature.size();
    const auto threshold = column<double>(nodes, "threshold", n);
    const auto left = column<int>(nodes, "left", n);
    const auto right = column<int>(nodes, "right", n);
    const auto weight = column<double>(nodes, "weight", n);
    const auto grad_sum = column<double>(nodes, "grad_sum", n);
    const auto hess_sum = column<double>(nodes, "hess_sum", n);
    const auto gain = column<double>(nodes, "gain", n);
    check_links(feature, left, right);
    gbm::RegressionTree tree;
    for (std::size_t i = 0; i < n; ++i) {
      tree.nodes.push_back({feature[i], threshold[i], left[i], right[i], weight[i], grad_sum[i], hess_sum[i], gain[i]});
    }
    return tree;
  });
}

nlohmann::json to_json(const gbm::GbmModel& model) {
  const auto& p = model.params;
  nlohmann::json params = {{"n_rounds", p.n_rounds},         {"max_depth", p.max_depth},
                           {"learning_rate", p.learning_rate}, {"lambda", p.lambda},
                           {"gamma", p.gamma},                 {"min_child_hessian", p.min_child_hessian},
                           {"base_score", p.base_score},       {"loss", "logistic"},
                           {"seed", p.seed}};
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees) trees.push_back(to_json(t));
  return {{"format", "delaycast.gbm"},
          {"version", 1},
          {"width", model.width},
          {"initial_logit", model.initial_logit},
          {"params", params},
          {"trees", trees}};
}

gbm::GbmModel gbm_from_json(const nlohmann::json& j) {
  return parse("gbm", [&] {
    if (j.at("format") != "delaycast.gbm" || j.at("version") != 1) throw DataError("not a version-1 gbm document");
    gbm::GbmModel m;
    m.width = j.at("width").get<std::size_t>();
    m.initial_logit = j.at("initial_logit").get<double>();
    const auto& p = j.at("params");
    m.params.n_rounds = p.at("n_rounds").get<std::size_t>();
    m.params.max_depth = p.at("max_depth").get<std::size_t>();
    m.params.learning_rate = p.at("learning_rate").get<double>();
    m.params.lambda = p.at("lambda").get<double>();
    m.params.gamma = p.at("gamma").get<double>();
    m.params.min_child_hessian = p.at("min_child_hessian").get<double>();
    m.params.base_score = p.at("base_score").get<double>();
    m.params.seed = p.at("seed").get<std::uint64_t>();
    if (p.at("loss") != "logistic") throw DataError("unsupported loss kind");
    for (const auto& t : j.at("trees")) m.trees.push_back(regression_tree_from_json(t));
    return m;
  });
}

}  // namespace delaycast::tree_io
