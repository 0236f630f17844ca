#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "delaycast/fcnn.hpp"
#include "delaycast/forest.hpp"
#include "delaycast/gbm.hpp"
#include "delaycast/ingest.hpp"

namespace delaycast::cli {

enum class Classifier { Fcnn, Rdf, Xgb, Hybrid };

std::string to_string(Classifier c);   // config spelling: fcnn, rdf, xgb, hybrid
std::string display_name(Classifier c);  // table heading: FCNN, RDF, XGBoost, FCNN + RDF
Classifier parse_classifier(const std::string& name);

enum class MatrixFormat { Binary, Csv };

struct Seeds {
  std::uint64_t sampling = 1;
  std::uint64_t split = 2;
  std::uint64_t model = 3;
};

struct SweepConfig {
  std::string axis = "hidden_units";
  std::vector<std::size_t> values = {50, 100, 250, 500};
};

struct RunConfig {
  std::string input_csv;
  ingest::ColumnMap columns;
  ingest::LabelPolicy labels;
  int sample_per_month = 2000;
  double train_fraction = 0.75;
  Seeds seeds;
  ingest::Task task = ingest::Task::Total;
  Classifier classifier = Classifier::Hybrid;
  Classifier hybrid_head = Classifier::Rdf;  // rdf or xgb
  fcnn::NetworkConfig network;  // input_width and seed are filled per run
  forest::ForestParams forest;
  gbm::GbmParams gbm;
  std::string output_dir = "delaycast_out";
  MatrixFormat matrix_format = MatrixFormat::Binary;
  SweepConfig sweep;
  std::size_t jobs = 1;

  // Fully expanded configuration document (defaults + file + overrides).
  nlohmann::json document;

  // FNV-1a 64 of the canonical document, as 16 hex digits.
  std::string hash() const;
};

// The complete default document; every accepted key appears in it.
nlohmann::json default_config();

// Applies "dotted.key=value". The value is read as JSON when it parses,
// otherwise as a string. Unknown keys are a ConfigError.
void apply_override(nlohmann::json& document, const std::string& assignment);

// Merges `user` over the defaults and validates. Throws ConfigError naming
// the offending key.
RunConfig parse_config(const nlohmann::json& user, const std::vector<std::string>& overrides = {});

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

std::string fnv1a_hex(std::string_view bytes);

}  // namespace delaycast::cli
