#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "delaycast/ingest.hpp"
#include "delaycast/matrix.hpp"

namespace delaycast::encode {

enum class Encoding { Standardized, OneHot, Cyclic };

std::string to_string(Encoding encoding);

// One design-matrix column and where it came from.
//  Standardized: (value - mean) / sd with training statistics.
//  OneHot:       1 when the field's category equals `level`.
//  Cyclic:       sin or cos (level "sin" / "cos") of 2*pi*value/period.
struct FeatureColumn {
  std::string field;
  Encoding encoding = Encoding::Standardized;
  std::string level;
  double mean = 0.0;
  double sd = 1.0;
  double period = 0.0;

  std::string name() const;
  bool operator==(const FeatureColumn&) const = default;
};

struct FeatureSchema {
  std::vector<FeatureColumn> columns;

  std::size_t width() const { return columns.size(); }
  bool operator==(const FeatureSchema&) const = default;
};

// Which record fields are encoded, and how.
struct EncodeOptions {
  std::vector<std::string> categorical = {"marketing_carrier", "operating_carrier", "origin_state", "dest_state",
                                          "month",             "day_of_week",       "distance_group", "haul"};
  std::vector<std::string> numeric = {"distance_miles", "scheduled_dep_time", "scheduled_arr_time"};
  std::vector<std::string> cyclic = {"scheduled_dep_time", "scheduled_arr_time"};
};

struct FeatureMatrix {
  Matrix values;
  FeatureSchema schema;
  Labels departure;
  Labels arrival;
  Labels total;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  const Labels& labels(ingest::Task task) const;
};

// Levels of every one-hot group are the distinct training values in sorted
// order (numeric order for integer-valued fields); standardization
// statistics come from `table` only. Throws EmptyTableError on empty input,
// SchemaError for an unknown field name.
FeatureSchema fit_schema(const ingest::FlightTable& table, const EncodeOptions& options = {});

// Applies a fitted schema. Categories unseen during fitting encode as an
// all-zero group.
FeatureMatrix encode(const ingest::FlightTable& table, const FeatureSchema& schema,
                     const ingest::LabelPolicy& policy = {});

// Random disjoint partition: round(n * train_fraction) training rows and the
// remainder, each kept in original row order.
std::pair<FeatureMatrix, FeatureMatrix> train_test_split(const FeatureMatrix& matrix, double train_fraction,
                                                         std::uint64_t seed);

// Row indices chosen for training by train_test_split (ascending).
std::vector<std::size_t> split_train_rows(std::size_t n, double train_fraction, std::uint64_t seed);

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& j);

// Self-contained little-endian container holding schema, labels and values.
void save_matrix_binary(const std::string& path, const FeatureMatrix& matrix);
FeatureMatrix load_matrix_binary(const std::string& path);

// CSV with one header column per feature plus the three label columns.
// The schema is not embedded; loading takes it separately.
void save_matrix_csv(const std::string& path, const FeatureMatrix& matrix);
FeatureMatrix load_matrix_csv(const std::string& path, const FeatureSchema& schema);

}  // namespace delaycast::encode
