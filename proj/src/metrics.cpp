#include "delaycast/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "delaycast/error.hpp"

namespace delaycast::metrics {
namespace {

double percent(std::size_t num, std::size_t den, const char* name, std::vector<std::string>& warnings) {
  if (den == 0) {
    warnings.push_back(std::string(name) + " undefined (zero denominator); reported as 0");
    return 0.0;
  }
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Confusion confusion(const Labels& predicted, const Labels& actual) {
  if (predicted.size() != actual.size()) throw ShapeError("prediction and label counts differ");
  Confusion c;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const bool p = predicted[i] != 0;
    const bool a = actual[i] != 0;
    if (p && a) ++c.tp;
    else if (p) ++c.fp;
    else if (a) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1_score(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

ClassificationReport classification_report(const Labels& predicted, const Labels& actual) {
  if (predicted.size() != actual.size()) throw ShapeError("prediction and label counts differ");
  if (actual.empty()) throw ShapeError("cannot score an empty prediction set");
  ClassificationReport r;
  r.confusion = confusion(predicted, actual);
  const auto& c = r.confusion;
  r.accuracy = percent(c.tp + c.tn, c.total(), "accuracy", r.warnings);
  r.precision = percent(c.tp, c.tp + c.fp, "precision", r.warnings);
  r.recall = percent(c.tp, c.tp + c.fn, "recall", r.warnings);
  if (r.precision + r.recall == 0.0) r.warnings.emplace_back("f1 undefined (precision + recall = 0); reported as 0");
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

RocCurve roc_curve(const std::vector<double>& scores, const Labels& labels) {
  if (scores.size() != labels.size()) throw ShapeError("score and label counts differ");
  std::size_t positives = 0;
  for (auto y : labels) positives += y != 0;
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw DomainError("ROC curve needs both classes among the labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  double area = 0.0;  // in units of positives * negatives, halved at the end
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    std::size_t dtp = 0, dfp = 0;
    for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] ? dtp : dfp) += 1;
    area += static_cast<double>(dfp) * static_cast<double>(2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives)});
  }
  curve.auc = area / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
  return curve;
}

std::pair<RocCurve, RocCurve> per_class_roc(const std::vector<double>& scores, const Labels& labels) {
  std::vector<double> flipped(scores.size());
  Labels inverted(labels.size());
  for (std::size_t i = 0; i < scores.size(); ++i) flipped[i] = 1.0 - scores[i];
  for (std::size_t i = 0; i < labels.size(); ++i) inverted[i] = labels[i] ? 0 : 1;
  return {roc_curve(scores, labels), roc_curve(flipped, inverted)};
}

nlohmann::json to_json(const ClassificationReport& r) {
  return {{"accuracy", r.accuracy},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}}},
          {"warnings", r.warnings}};
}

std::string roc_csv(const RocCurve& curve) {
  std::ostringstream out;
  out << "fpr,tpr\n";
  char buf[64];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.fpr, p.tpr);
    out << buf;
  }
  return out.str();
}

}  // namespace delaycast::metrics
