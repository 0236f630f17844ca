#include "delaycast/hybrid.hpp"

#include "delaycast/error.hpp"
#include "delaycast/tree_io.hpp"

namespace delaycast::hybrid {

HybridModel fit_head(const fcnn::Network& extractor, const Matrix& x, const Labels& y, const HeadParams& head_params) {
  const Matrix transformed = fcnn::extract_features(extractor, x);
  HybridModel model{extractor, forest::RandomForest{}, static_cast<std::size_t>(transformed.cols()), {}};
  if (const auto* fp = std::get_if<forest::ForestParams>(&head_params)) {
    model.head = forest::fit_forest(transformed, y, *fp);
  } else {
    model.head = gbm::fit_gbm(transformed, y, std::get<gbm::GbmParams>(head_params));
  }
  return model;
}

HybridModel fit_hybrid(const Matrix& x, const Labels& y, const fcnn::NetworkConfig& net_config,
                       const HeadParams& head_params) {
  auto trained = fcnn::fit_network(x, y, net_config);
  HybridModel model = fit_head(trained.network, x, y, head_params);
  model.history = std::move(trained.history);
  return model;
}

Prediction predict_hybrid(const HybridModel& model, const Matrix& batch) {
  const Matrix transformed = fcnn::extract_features(model.extractor, batch);
  if (static_cast<std::size_t>(transformed.cols()) != model.transformed_width) {
    throw StateError("extractor width does not match the head's training width");
  }
  Prediction out;
  if (const auto* f = std::get_if<forest::RandomForest>(&model.head)) {
    auto p = forest::predict_forest(*f, transformed);
    out.classes = std::move(p.classes);
    out.probabilities = std::move(p.probabilities);
  } else {
    out.probabilities = gbm::predict_gbm(std::get<gbm::GbmModel>(model.head), transformed);
    out.classes.reserve(out.probabilities.size());
    for (double p : out.probabilities) out.classes.push_back(p >= 0.5 ? 1 : 0);
  }
  return out;
}

nlohmann::json to_json(const HybridModel& model) {
  nlohmann::json head;
  std::string kind;
  if (const auto* f = std::get_if<forest::RandomForest>(&model.head)) {
    kind = "rdf";
    head = tree_io::to_json(*f);
  } else {
    kind = "xgb";
    head = tree_io::to_json(std::get<gbm::GbmModel>(model.head));
  }
  return {{"format", "delaycast.hybrid"},
          {"version", 1},
          {"transformed_width", model.transformed_width},
          {"head_kind", kind},
          {"extractor", fcnn::to_json(model.extractor)},
          {"head", std::move(head)}};
}

HybridModel hybrid_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "delaycast.hybrid" || j.at("version") != 1) throw DataError("not a version-1 hybrid bundle");
    HybridModel model{fcnn::network_from_json(j.at("extractor")), forest::RandomForest{},
                      j.at("transformed_width").get<std::size_t>(), {}};
    const auto kind = j.at("head_kind").get<std::string>();
    if (kind == "rdf") {
      model.head = tree_io::forest_from_json(j.at("head"));
    } else if (kind == "xgb") {
      model.head = tree_io::gbm_from_json(j.at("head"));
    } else {
      throw DataError("unknown hybrid head kind '" + kind + "'");
    }
    if (model.extractor.feature_width() != model.transformed_width) {
      throw DataError("hybrid bundle: extractor width does not match transformed width");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed hybrid bundle: ") + e.what());
  }
}

}  // namespace delaycast::hybrid
