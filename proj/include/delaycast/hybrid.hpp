#pragma once

#include <variant>

#include <json.hpp>

#include "delaycast/fcnn.hpp"
#include "delaycast/forest.hpp"
#include "delaycast/gbm.hpp"

namespace delaycast::hybrid {

using HeadParams = std::variant<forest::ForestParams, gbm::GbmParams>;
using Head = std::variant<forest::RandomForest, gbm::GbmModel>;

// A trained network used as a fixed feature extractor plus a tree ensemble
// fitted on its final hidden activations.
struct HybridModel {
  fcnn::Network extractor;
  Head head;
  std::size_t transformed_width = 0;
  fcnn::TrainHistory history;  // extractor training, not persisted
};

// Stage 1 trains the network on the raw features, stage 2 maps every
// training row through the extractor in eval mode and fits the head on the
// transformed rows with the original labels.
HybridModel fit_hybrid(const Matrix& x, const Labels& y, const fcnn::NetworkConfig& net_config,
                       const HeadParams& head_params);

// Fits only the head on an already trained extractor; `extractor` is copied,
// never modified.
HybridModel fit_head(const fcnn::Network& extractor, const Matrix& x, const Labels& y, const HeadParams& head_params);

struct Prediction {
  Labels classes;
  std::vector<double> probabilities;
};

// head prediction on extract_features(batch); class = probability >= 0.5.
Prediction predict_hybrid(const HybridModel& model, const Matrix& batch);

nlohmann::json to_json(const HybridModel& model);
HybridModel hybrid_from_json(const nlohmann::json& j);

}  // namespace delaycast::hybrid
