#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "delaycast/config.hpp"
#include "delaycast/encode.hpp"
#include "delaycast/metrics.hpp"

namespace delaycast::cli {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitTraining = 4;

int exit_code_for(const std::exception& e);

struct IngestSummary {
  std::size_t parsed = 0;
  std::size_t sampled = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t width = 0;
};

// parse -> sample -> split -> fit schema on the training rows -> encode.
// Writes sample.csv, schema.json, train/test matrices, skip_report.txt and
// the manifest entry into the output directory.
IngestSummary cmd_ingest(const RunConfig& config, std::ostream& log);

// Per-key delay-rate CSVs (eda_<key>.csv) from the ingested sample.
std::vector<std::filesystem::path> cmd_analyze(const RunConfig& config, std::ostream& log);

struct TrainedMatrices {
  encode::FeatureMatrix train;
  encode::FeatureMatrix test;
};

// Loads the ingest artifacts; DataError when they are missing.
TrainedMatrices load_ingested(const RunConfig& config);

struct CellResult {
  Classifier classifier = Classifier::Hybrid;
  ingest::Task task = ingest::Task::Total;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  int exit_code = kExitOk;
  metrics::ClassificationReport report;
  double auc_class1 = 0.0;
  double auc_class0 = 0.0;
  double wall_seconds = 0.0;
  std::filesystem::path directory;
};

// Trains one classifier on one task, evaluates on the test split and writes
// metrics.json, roc_class0.csv, roc_class1.csv and model.json into
// `directory`. Exceptions propagate.
CellResult train_and_evaluate(const RunConfig& config, Classifier classifier, ingest::Task task,
                              const TrainedMatrices& data, std::uint64_t seed,
                              const std::filesystem::path& directory);

// The configured classifier on the configured task, written under
// runs/<classifier>-<task>/.
CellResult cmd_train_eval(const RunConfig& config, std::ostream& log);

struct BenchmarkReport {
  std::vector<CellResult> cells;  // task-major, classifiers in table order

  bool complete() const;
  nlohmann::json to_json() const;
  std::string render() const;
};

// Classifier column order of the rendered table.
std::vector<Classifier> benchmark_classifiers();

// All 3 tasks x 4 classifiers on the shared ingest split. A failing cell is
// recorded and the run continues.
BenchmarkReport cmd_benchmark(const RunConfig& config, std::ostream& log);

struct SweepPoint {
  std::size_t value = 0;
  bool anchor = false;
  bool ok = false;
  std::string error;
  metrics::ClassificationReport report;
  double auc_class1 = 0.0;
};

// One hybrid model per grid value of the axis, all other settings from the
// config. The config's own value for the axis is always part of the grid.
// Writes sweep_<axis>.csv.
std::vector<SweepPoint> cmd_sweep(const RunConfig& config, std::ostream& log);

// Adds or replaces one command entry of <output_dir>/manifest.json.
void record_manifest(const RunConfig& config, const std::string& command,
                     const std::vector<std::filesystem::path>& files, const nlohmann::json& extra = {});

}  // namespace delaycast::cli
