#include "delaycast/encode.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "delaycast/csv.hpp"
#include "delaycast/error.hpp"
#include "delaycast/rng.hpp"

namespace delaycast::encode {
namespace {

using ingest::FlightRecord;

constexpr char kMagic[4] = {'D', 'C', 'M', 'X'};
constexpr std::uint32_t kBinaryVersion = 1;

std::string category(const FlightRecord& r, const std::string& field) {
  if (field == "marketing_carrier") return r.marketing_carrier;
  if (field == "operating_carrier") return r.operating_carrier;
  if (field == "origin_state") return r.origin_state;
  if (field == "dest_state") return r.dest_state;
  if (field == "month") return std::to_string(r.month);
  if (field == "day_of_week") return std::to_string(r.day_of_week);
  if (field == "year") return std::to_string(r.year);
  if (field == "distance_group") return std::to_string(ingest::distance_group(r.distance_miles));
  if (field == "haul") return ingest::to_string(ingest::haul_category(r.distance_miles));
  if (field == "dep_hour") return std::to_string(r.scheduled_dep_time / 60);
  if (field == "arr_hour") return std::to_string(r.scheduled_arr_time / 60);
  throw SchemaError("field '" + field + "' cannot be one-hot encoded");
}

double numeric(const FlightRecord& r, const std::string& field) {
  if (field == "distance_miles") return r.distance_miles;
  if (field == "scheduled_dep_time") return r.scheduled_dep_time;
  if (field == "scheduled_arr_time") return r.scheduled_arr_time;
  if (field == "month") return r.month;
  if (field == "day_of_week") return r.day_of_week;
  if (field == "year") return r.year;
  throw SchemaError("field '" + field + "' is not numeric");
}

double cycle_period(const std::string& field) {
  if (field == "scheduled_dep_time" || field == "scheduled_arr_time") return 1440.0;
  if (field == "month") return 12.0;
  if (field == "day_of_week") return 7.0;
  throw SchemaError("field '" + field + "' has no cyclic encoding");
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Integer-valued levels sort numerically, everything else lexicographically.
bool level_less(const std::string& a, const std::string& b) {
  if (all_digits(a) && all_digits(b)) {
    if (a.size() != b.size()) return a.size() < b.size();
  }
  return a < b;
}

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "binary container assumes little-endian host");
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw DataError("truncated matrix container");
  return v;
}

std::string label_name(int i) {
  static const char* names[] = {"label_departure", "label_arrival", "label_total"};
  return names[i];
}

}  // namespace

std::string to_string(Encoding encoding) {
  switch (encoding) {
    case Encoding::Standardized: return "standardized";
    case Encoding::OneHot: return "one_hot";
    case Encoding::Cyclic: return "cyclic";
  }
  return "?";
}

std::string FeatureColumn::name() const {
  switch (encoding) {
    case Encoding::Standardized: return field;
    case Encoding::OneHot: return field + "=" + level;
    case Encoding::Cyclic: return field + ":" + level;
  }
  return field;
}

const Labels& FeatureMatrix::labels(ingest::Task task) const {
  switch (task) {
    case ingest::Task::Departure: return departure;
    case ingest::Task::Arrival: return arrival;
    case ingest::Task::Total: return total;
  }
  return total;
}

FeatureSchema fit_schema(const ingest::FlightTable& table, const EncodeOptions& options) {
  if (table.empty()) throw EmptyTableError("cannot fit a schema on an empty table");
  FeatureSchema schema;

  for (const auto& field : options.categorical) {
    std::set<std::string, decltype(&level_less)> levels(&level_less);
    for (const auto& r : table) levels.insert(category(r, field));
    for (const auto& level : levels) {
      schema.columns.push_back({field, Encoding::OneHot, level, 0.0, 1.0, 0.0});
    }
  }
  const double n = static_cast<double>(table.size());
  for (const auto& field : options.numeric) {
    double mean = 0.0;
    for (const auto& r : table) mean += numeric(r, field);
    mean /= n;
    double var = 0.0;
    for (const auto& r : table) var += (numeric(r, field) - mean) * (numeric(r, field) - mean);
    double sd = std::sqrt(var / n);
    if (!(sd > 0.0)) sd = 1.0;  // constant column
    schema.columns.push_back({field, Encoding::Standardized, "", mean, sd, 0.0});
  }
  for (const auto& field : options.cyclic) {
    const double period = cycle_period(field);
    schema.columns.push_back({field, Encoding::Cyclic, "sin", 0.0, 1.0, period});
    schema.columns.push_back({field, Encoding::Cyclic, "cos", 0.0, 1.0, period});
  }
  return schema;
}

FeatureMatrix encode(const ingest::FlightTable& table, const FeatureSchema& schema,
                     const ingest::LabelPolicy& policy) {
  // Validate every column against the record layout before touching data.
  FlightRecord probe;
  for (const auto& col : schema.columns) {
    switch (col.encoding) {
      case Encoding::OneHot: category(probe, col.field); break;
      case Encoding::Standardized: numeric(probe, col.field); break;
      case Encoding::Cyclic:
        numeric(probe, col.field);
        if (col.level != "sin" && col.level != "cos") throw SchemaError("bad cyclic level '" + col.level + "'");
        if (!(col.period > 0.0)) throw SchemaError("cyclic column '" + col.name() + "' needs a positive period");
        break;
    }
    if (col.encoding == Encoding::Standardized && !(col.sd > 0.0)) {
      throw SchemaError("column '" + col.name() + "' has non-positive sd");
    }
  }

  FeatureMatrix out;
  out.schema = schema;
  out.values = Matrix::Zero(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(schema.width()));
  out.departure.resize(table.size());
  out.arrival.resize(table.size());
  out.total.resize(table.size());

  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& r = table[i];
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const auto& col = schema.columns[c];
      double v = 0.0;
      switch (col.encoding) {
        case Encoding::OneHot: v = category(r, col.field) == col.level ? 1.0 : 0.0; break;
        case Encoding::Standardized: v = (numeric(r, col.field) - col.mean) / col.sd; break;
        case Encoding::Cyclic: {
          const double angle = 2.0 * M_PI * numeric(r, col.field) / col.period;
          v = col.level == "sin" ? std::sin(angle) : std::cos(angle);
          break;
        }
      }
      if (!std::isfinite(v)) throw DataError("non-finite value encoding column '" + col.name() + "'");
      out.values(row, static_cast<Eigen::Index>(c)) = v;
    }
    const auto labels = ingest::derive_labels(r, policy);
    out.departure[i] = labels.departure_delayed;
    out.arrival[i] = labels.arrival_delayed;
    out.total[i] = labels.total_delayed;
  }
  return out;
}

std::vector<std::size_t> split_train_rows(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DomainError("train_fraction must lie in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  Rng rng(seed);
  return sample_without_replacement(n, n_train, rng);
}

std::pair<FeatureMatrix, FeatureMatrix> train_test_split(const FeatureMatrix& matrix, double train_fraction,
                                                         std::uint64_t seed) {
  const std::size_t n = matrix.rows();
  const auto train_rows = split_train_rows(n, train_fraction, seed);
  std::vector<std::size_t> test_rows;
  test_rows.reserve(n - train_rows.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (next < train_rows.size() && train_rows[next] == i) {
      ++next;
    } else {
      test_rows.push_back(i);
    }
  }

  auto subset = [&](const std::vector<std::size_t>& rows) {
    FeatureMatrix part;
    part.schema = matrix.schema;
    part.values = take_rows(matrix.values, rows);
    part.departure = take_labels(matrix.departure, rows);
    part.arrival = take_labels(matrix.arrival, rows);
    part.total = take_labels(matrix.total, rows);
    return part;
  };
  return {subset(train_rows), subset(test_rows)};
}

nlohmann::json schema_to_json(const FeatureSchema& schema) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : schema.columns) {
    nlohmann::json j = {{"field", c.field}, {"encoding", to_string(c.encoding)}};
    if (c.encoding != Encoding::Standardized) j["level"] = c.level;
    if (c.encoding == Encoding::Standardized) {
      j["mean"] = c.mean;
      j["sd"] = c.sd;
    }
    if (c.encoding == Encoding::Cyclic) j["period"] = c.period;
    cols.push_back(std::move(j));
  }
  return {{"format", "delaycast.schema"}, {"version", 1}, {"columns", std::move(cols)}};
}

FeatureSchema schema_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "delaycast.schema") throw DataError("not a delaycast schema document");
    FeatureSchema schema;
    for (const auto& c : j.at("columns")) {
      FeatureColumn col;
      col.field = c.at("field").get<std::string>();
      const auto enc = c.at("encoding").get<std::string>();
      if (enc == "standardized") {
        col.encoding = Encoding::Standardized;
        col.mean = c.at("mean").get<double>();
        col.sd = c.at("sd").get<double>();
      } else if (enc == "one_hot") {
        col.encoding = Encoding::OneHot;
        col.level = c.at("level").get<std::string>();
      } else if (enc == "cyclic") {
        col.encoding = Encoding::Cyclic;
        col.level = c.at("level").get<std::string>();
        col.period = c.at("period").get<double>();
      } else {
        throw SchemaError("unknown encoding '" + enc + "'");
      }
      schema.columns.push_back(std::move(col));
    }
    return schema;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed schema document: ") + e.what());
  }
}

void save_matrix_binary(const std::string& path, const FeatureMatrix& matrix) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  const std::string schema = schema_to_json(matrix.schema).dump();
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kBinaryVersion);
  put<std::uint64_t>(out, matrix.rows());
  put<std::uint64_t>(out, static_cast<std::uint64_t>(matrix.values.cols()));
  put<std::uint64_t>(out, schema.size());
  out.write(schema.data(), static_cast<std::streamsize>(schema.size()));
  for (const Labels* labels : {&matrix.departure, &matrix.arrival, &matrix.total}) {
    out.write(reinterpret_cast<const char*>(labels->data()), static_cast<std::streamsize>(labels->size()));
  }
  out.write(reinterpret_cast<const char*>(matrix.values.data()),
            static_cast<std::streamsize>(matrix.values.size() * sizeof(double)));
  if (!out) throw DataError("failed writing '" + path + "'");
}

FeatureMatrix load_matrix_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw DataError("'" + path + "' is not a matrix container");
  if (get<std::uint32_t>(in) != kBinaryVersion) throw DataError("unsupported matrix container version");
  const auto rows = get<std::uint64_t>(in);
  const auto cols = get<std::uint64_t>(in);
  const auto schema_len = get<std::uint64_t>(in);
  std::string schema(schema_len, '\0');
  in.read(schema.data(), static_cast<std::streamsize>(schema_len));
  if (!in) throw DataError("truncated matrix container");

  FeatureMatrix m;
  m.schema = schema_from_json(nlohmann::json::parse(schema));
  if (m.schema.width() != cols) throw DataError("schema width does not match stored matrix width");
  for (Labels* labels : {&m.departure, &m.arrival, &m.total}) {
    labels->resize(rows);
    in.read(reinterpret_cast<char*>(labels->data()), static_cast<std::streamsize>(rows));
  }
  m.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  in.read(reinterpret_cast<char*>(m.values.data()), static_cast<std::streamsize>(rows * cols * sizeof(double)));
  if (!in) throw DataError("truncated matrix container");
  return m;
}

void save_matrix_csv(const std::string& path, const FeatureMatrix& matrix) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  csv::Row header;
  for (const auto& c : matrix.schema.columns) header.push_back(c.name());
  for (int i = 0; i < 3; ++i) header.push_back(label_name(i));
  csv::write_row(out, header);
  char buf[32];
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    csv::Row row;
    row.reserve(header.size());
    for (Eigen::Index c = 0; c < matrix.values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", matrix.values(static_cast<Eigen::Index>(r), c));
      row.emplace_back(buf);
    }
    row.push_back(std::to_string(matrix.departure[r]));
    row.push_back(std::to_string(matrix.arrival[r]));
    row.push_back(std::to_string(matrix.total[r]));
    csv::write_row(out, row);
  }
}

FeatureMatrix load_matrix_csv(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  csv::Reader reader(in);
  auto header = reader.next();
  const std::size_t width = schema.width();
  if (!header || header->size() != width + 3) throw SchemaError("matrix CSV header does not match schema width");
  for (std::size_t c = 0; c < width; ++c) {
    if ((*header)[c] != schema.columns[c].name()) throw SchemaError("matrix CSV column '" + (*header)[c] + "' does not match schema");
  }

  std::vector<double> values;
  FeatureMatrix m;
  m.schema = schema;
  while (auto row = reader.next()) {
    if (row->size() != width + 3) throw DataError("matrix CSV row has wrong field count");
    for (std::size_t c = 0; c < width; ++c) values.push_back(std::stod((*row)[c]));
    m.departure.push_back(static_cast<std::uint8_t>(std::stoi((*row)[width])));
    m.arrival.push_back(static_cast<std::uint8_t>(std::stoi((*row)[width + 1])));
    m.total.push_back(static_cast<std::uint8_t>(std::stoi((*row)[width + 2])));
  }
  m.values = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(m.departure.size()),
                                static_cast<Eigen::Index>(width));
  return m;
}

}  // namespace delaycast::encode
