#pragma once

#include <json.hpp>

#include "delaycast/forest.hpp"
#include "delaycast/gbm.hpp"

// JSON persistence for both tree ensembles. Every tree is stored as parallel
// node arrays (feature, threshold, left, right, plus per-kind leaf payload)
// next to the ensemble's scalar parameters.
namespace delaycast::tree_io {

nlohmann::json to_json(const forest::DecisionTree& tree);
forest::DecisionTree decision_tree_from_json(const nlohmann::json& j);

nlohmann::json to_json(const forest::RandomForest& forest);
forest::RandomForest forest_from_json(const nlohmann::json& j);

nlohmann::json to_json(const gbm::RegressionTree& tree);
gbm::RegressionTree regression_tree_from_json(const nlohmann::json& j);

nlohmann::json to_json(const gbm::GbmModel& model);
gbm::GbmModel gbm_from_json(const nlohmann::json& j);

}  // namespace delaycast::tree_io
