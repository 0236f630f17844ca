#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "delaycast/encode.hpp"
#include "delaycast/error.hpp"
#include "synthetic.hpp"

using namespace delaycast;
using namespace delaycast::encode;
using delaycast::ingest::FlightRecord;
using delaycast::ingest::FlightTable;

namespace {

FlightRecord carrier_flight(const std::string& carrier, double distance) {
  FlightRecord r;
  r.marketing_carrier = carrier;
  r.distance_miles = distance;
  return r;
}

EncodeOptions only(std::vector<std::string> categorical, std::vector<std::string> numeric) {
  EncodeOptions o;
  o.categorical = std::move(categorical);
  o.numeric = std::move(numeric);
  o.cyclic.clear();
  return o;
}

}  // namespace

TEST(Encode, ThreeLevelsThreeColumns) {
  const FlightTable t = {carrier_flight("UA", 0), carrier_flight("AA", 0), carrier_flight("DL", 0),
                         carrier_flight("AA", 0)};
  const auto schema = fit_schema(t, only({"marketing_carrier"}, {}));
  ASSERT_EQ(schema.width(), 3u);
  EXPECT_EQ(schema.columns[0].name(), "marketing_carrier=AA");
  EXPECT_EQ(schema.columns[2].name(), "marketing_carrier=UA");
  const auto m = encode::encode(t, schema);
  EXPECT_EQ(m.values.row(1).sum(), 1.0);
  EXPECT_EQ(m.values(1, 0), 1.0);
}

TEST(Encode, StandardizationArithmetic) {
  const FlightTable t = {carrier_flight("AA", 0), carrier_flight("AA", 10)};
  const auto schema = fit_schema(t, only({}, {"distance_miles"}));
  ASSERT_EQ(schema.width(), 1u);
  EXPECT_DOUBLE_EQ(schema.columns[0].mean, 5.0);
  EXPECT_DOUBLE_EQ(schema.columns[0].sd, 5.0);
  const auto m = encode::encode(t, schema);
  EXPECT_DOUBLE_EQ(m.values(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(m.values(1, 0), 1.0);
}

TEST(Encode, UnseenCategoryIsAllZero) {
  const FlightTable train = {carrier_flight("AA", 0), carrier_flight("DL", 0)};
  const auto schema = fit_schema(train, only({"marketing_carrier"}, {}));
  const auto m = encode::encode({carrier_flight("ZZ", 0)}, schema);
  EXPECT_EQ(m.values.row(0).sum(), 0.0);
}

TEST(Encode, NumericLevelsSortNumerically) {
  FlightTable t;
  for (int month : {10, 2, 1, 12}) {
    FlightRecord r;
    r.month = month;
    t.push_back(r);
  }
  const auto schema = fit_schema(t, only({"month"}, {}));
  std::vector<std::string> levels;
  for (const auto& c : schema.columns) levels.push_back(c.level);
  EXPECT_EQ(levels, (std::vector<std::string>{"1", "2", "10", "12"}));
}

TEST(Encode, UnknownFieldIsSchemaError) {
  const FlightTable t = {carrier_flight("AA", 0)};
  EXPECT_THROW(fit_schema(t, only({"tail_number"}, {})), SchemaError);
  EXPECT_THROW(fit_schema(t, only({}, {"origin_state"})), SchemaError);
  FeatureSchema bad;
  bad.columns.push_back({"gate", Encoding::OneHot, "A1", 0, 1, 0});
  EXPECT_THROW(encode::encode(t, bad), SchemaError);
  EXPECT_THROW(fit_schema({}), EmptyTableError);
}

TEST(Encode, EveryTrainingRowHasExactlyOneHotPerGroup) {
  const auto t = testsupport::random_flights(800, 3);
  const auto schema = fit_schema(t);
  const auto m = encode::encode(t, schema);
  ASSERT_EQ(static_cast<std::size_t>(m.values.cols()), schema.width());
  EXPECT_TRUE(m.values.allFinite());
  const EncodeOptions defaults;
  for (const auto& field : defaults.categorical) {
    std::vector<Eigen::Index> cols;
    for (std::size_t c = 0; c < schema.width(); ++c) {
      if (schema.columns[c].field == field && schema.columns[c].encoding == Encoding::OneHot) {
        cols.push_back(static_cast<Eigen::Index>(c));
      }
    }
    ASSERT_FALSE(cols.empty()) << field;
    for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
      double sum = 0.0;
      for (auto c : cols) sum += m.values(r, c);
      ASSERT_EQ(sum, 1.0) << field << " row " << r;
    }
  }
}

TEST(Encode, CyclicColumnsOnUnitCircle) {
  const auto t = testsupport::random_flights(50, 4);
  const auto schema = fit_schema(t);
  const auto m = encode::encode(t, schema);
  for (std::size_t c = 0; c + 1 < schema.width(); ++c) {
    if (schema.columns[c].encoding != Encoding::Cyclic || schema.columns[c].level != "sin") continue;
    ASSERT_EQ(schema.columns[c + 1].level, "cos");
    for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
      const double s = m.values(r, static_cast<Eigen::Index>(c));
      const double co = m.values(r, static_cast<Eigen::Index>(c + 1));
      EXPECT_NEAR(s * s + co * co, 1.0, 1e-12);
    }
  }
}

TEST(Encode, LabelsAttachedForAllTasks) {
  FlightRecord r;
  r.dep_delay_minutes = 0;
  r.arr_delay_minutes = 30;
  const auto m = encode::encode({r}, fit_schema({r}));
  EXPECT_EQ(m.departure[0], 0);
  EXPECT_EQ(m.arrival[0], 1);
  EXPECT_EQ(m.total[0], 1);
  EXPECT_EQ(&m.labels(ingest::Task::Arrival), &m.arrival);
}

TEST(Split, MonthlySampleSizes) {
  const auto rows = split_train_rows(54000, 0.75, 7);
  EXPECT_EQ(rows.size(), 40500u);
  EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end()));
}

TEST(Split, PartitionPropertyAcrossSeeds) {
  const auto t = testsupport::random_flights(40, 2);
  const auto m = encode::encode(t, fit_schema(t));
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto [train, test] = train_test_split(m, 0.5, seed);
    ASSERT_EQ(train.rows(), 20u);
    ASSERT_EQ(test.rows(), 20u);
    // rows are distinct (distance and times make them unique), so compare as sets
    std::multiset<std::vector<double>> all, parts;
    auto collect = [](const FeatureMatrix& fm, std::multiset<std::vector<double>>& into) {
      for (Eigen::Index r = 0; r < fm.values.rows(); ++r) {
        into.insert(std::vector<double>(fm.values.row(r).data(), fm.values.row(r).data() + fm.values.cols()));
      }
    };
    collect(m, all);
    collect(train, parts);
    collect(test, parts);
    ASSERT_EQ(all, parts);
  }
}

TEST(Split, FourRowsHalf) {
  const auto a = split_train_rows(4, 0.5, 99);
  EXPECT_EQ(a.size(), 2u);
  EXPECT_EQ(a, split_train_rows(4, 0.5, 99));
}

TEST(Split, FractionOutOfRange) {
  EXPECT_THROW(split_train_rows(10, 0.0, 1), DomainError);
  EXPECT_THROW(split_train_rows(10, 1.0, 1), DomainError);
  EXPECT_THROW(split_train_rows(10, -0.2, 1), DomainError);
}

TEST(Split, SchemaStatisticsUseTrainingRowsOnly) {
  FlightTable train = {carrier_flight("AA", 100), carrier_flight("AA", 300)};
  const auto schema = fit_schema(train, only({}, {"distance_miles"}));
  const auto test = encode::encode({carrier_flight("AA", 5000)}, schema);
  EXPECT_DOUBLE_EQ(schema.columns[0].mean, 200.0);
  EXPECT_DOUBLE_EQ(test.values(0, 0), (5000.0 - 200.0) / 100.0);
}

TEST(Persist, SchemaJsonRoundTrip) {
  const auto t = testsupport::random_flights(100, 6);
  const auto schema = fit_schema(t);
  EXPECT_EQ(schema_from_json(schema_to_json(schema)), schema);
}

TEST(Persist, BinaryAndCsvMatrixRoundTrip) {
  testsupport::TempDir dir("encode");
  const auto t = testsupport::random_flights(120, 6);
  const auto m = encode::encode(t, fit_schema(t));

  save_matrix_binary(dir.file("m.dcm"), m);
  const auto b = load_matrix_binary(dir.file("m.dcm"));
  EXPECT_EQ(b.values, m.values);
  EXPECT_EQ(b.schema, m.schema);
  EXPECT_EQ(b.total, m.total);
  EXPECT_EQ(b.departure, m.departure);

  save_matrix_csv(dir.file("m.csv"), m);
  const auto c = load_matrix_csv(dir.file("m.csv"), m.schema);
  EXPECT_EQ(c.values, m.values);
  EXPECT_EQ(c.arrival, m.arrival);
}

TEST(Persist, CorruptBinaryRejected) {
  testsupport::TempDir dir("encode");
  {
    std::ofstream out(dir.file("bad.dcm"), std::ios::binary);
    out << "NOPE0000";
  }
  EXPECT_THROW(load_matrix_binary(dir.file("bad.dcm")), DataError);
}
