#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "delaycast/matrix.hpp"

namespace delaycast::metrics {

// Class 1 ("delayed") is the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

Confusion confusion(const Labels& predicted, const Labels& actual);

// All four scores in percent. A zero denominator yields 0 and a warning.
struct ClassificationReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Confusion confusion;
  std::vector<std::string> warnings;
};

ClassificationReport classification_report(const Labels& predicted, const Labels& actual);

// Harmonic mean 2PR / (P + R); 0 when P + R = 0.
double f1_score(double precision, double recall);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) ... (1,1)
  double auc = 0.0;
};

// Threshold sweep over distinct scores, highest first; tied scores move
// together, so ties contribute a diagonal segment. AUC is the trapezoidal
// area. Throws DomainError unless both classes occur.
RocCurve roc_curve(const std::vector<double>& scores, const Labels& labels);

// Curves for class 1 (scores, labels) and class 0 (1 - score, 1 - label).
std::pair<RocCurve, RocCurve> per_class_roc(const std::vector<double>& scores, const Labels& labels);

nlohmann::json to_json(const ClassificationReport& report);

// Two columns "fpr,tpr" with a header row.
std::string roc_csv(const RocCurve& curve);

}  // namespace delaycast::metrics
