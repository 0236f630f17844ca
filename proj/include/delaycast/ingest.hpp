#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace delaycast::ingest {

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;
  std::string to_string() const;  // YYYY-MM-DD
};

// Accepts ISO "2019-01-31" and BTS-style "1/31/2019 12:00:00 AM".
Date parse_date(const std::string& text);

// ISO weekday, 1 = Monday ... 7 = Sunday (the BTS DAY_OF_WEEK convention).
int weekday(const Date& date);

struct FlightRecord {
  Date flight_date;
  int year = 1970;
  int month = 1;        // 1..12
  int day_of_week = 1;  // 1..7
  std::string marketing_carrier;
  std::string operating_carrier;
  std::string origin_state;
  std::string dest_state;
  int scheduled_dep_time = 0;  // minutes since midnight, 0..1439
  int scheduled_arr_time = 0;
  int dep_delay_minutes = 0;
  int arr_delay_minutes = 0;
  double distance_miles = 0.0;
  bool cancelled = false;
  bool diverted = false;

  bool operator==(const FlightRecord&) const = default;
};

using FlightTable = std::vector<FlightRecord>;

// Source CSV column for each record field. Defaults follow the BTS
// "Reporting Carrier On-Time Performance" export. An empty name marks an
// optional field as absent: year, month and day_of_week are then derived from
// flight_date, cancelled / diverted default to false.
struct ColumnMap {
  std::string flight_date = "FL_DATE";
  std::string year = "YEAR";
  std::string month = "MONTH";
  std::string day_of_week = "DAY_OF_WEEK";
  std::string marketing_carrier = "MKT_UNIQUE_CARRIER";
  std::string operating_carrier = "OP_UNIQUE_CARRIER";
  std::string origin_state = "ORIGIN_STATE_ABR";
  std::string dest_state = "DEST_STATE_ABR";
  std::string scheduled_dep_time = "CRS_DEP_TIME";  // hhmm
  std::string scheduled_arr_time = "CRS_ARR_TIME";  // hhmm
  std::string dep_delay_minutes = "DEP_DELAY";
  std::string arr_delay_minutes = "ARR_DELAY";
  std::string distance_miles = "DISTANCE";
  std::string cancelled = "CANCELLED";
  std::string diverted = "DIVERTED";
};

struct SkipReport {
  std::size_t rows_read = 0;
  std::size_t kept = 0;
  std::size_t missing_delay = 0;  // empty or unparseable DEP/ARR delay
  std::size_t cancelled = 0;
  std::size_t diverted = 0;
  std::size_t malformed = 0;      // any other unparseable / out-of-range field

  std::size_t skipped() const { return rows_read - kept; }
  std::string summary() const;
};

struct ParseResult {
  FlightTable table;
  SkipReport skips;
};

// Throws SchemaError naming the first mapped column absent from the header,
// EmptyTableError when the source has no header row.
ParseResult parse_records(std::istream& csv_source, const ColumnMap& columns = {});
ParseResult parse_records_file(const std::string& path, const ColumnMap& columns = {});

// Writes records with the default ColumnMap header; parse_records reads it back.
void write_records(std::ostream& out, const FlightTable& table);

enum class TotalDelayRule { Either, ArrivalOnly };

struct LabelPolicy {
  int threshold_minutes = 15;
  TotalDelayRule total_rule = TotalDelayRule::Either;
};

struct DelayLabels {
  std::uint8_t departure_delayed = 0;
  std::uint8_t arrival_delayed = 0;
  std::uint8_t total_delayed = 0;

  bool operator==(const DelayLabels&) const = default;
};

DelayLabels derive_labels(const FlightRecord& record, int threshold_minutes);
DelayLabels derive_labels(const FlightRecord& record, const LabelPolicy& policy);

enum class Task { Departure, Arrival, Total };

std::uint8_t label_for(const DelayLabels& labels, Task task);
std::string to_string(Task task);
Task parse_task(const std::string& name);

// floor(distance / 250) capped at 10. Throws DomainError for negative input.
int distance_group(double distance_miles);

enum class Haul { Short, Medium, Long };

// Short [0, 800), Medium [800, 2200], Long > 2200.
Haul haul_category(double distance_miles);
std::string to_string(Haul haul);

// Uniform sample without replacement of min(n_per_month, group size) rows
// from every (year, month) group. Output keeps the input order. A group
// smaller than n_per_month is kept whole and reported through `warnings`.
FlightTable stratified_monthly_sample(const FlightTable& table, int n_per_month, std::uint64_t seed,
                                      std::vector<std::string>* warnings = nullptr);

enum class GroupKey {
  OriginState,
  Month,
  DayOfWeek,
  DepHour,
  ArrHour,
  DistanceGroup,
  Haul,
  MarketingCarrier,
  OperatingCarrier,
};

std::string to_string(GroupKey key);
GroupKey parse_group_key(const std::string& name);
std::vector<GroupKey> all_group_keys();

struct RateRow {
  std::string key;
  std::size_t flights = 0;
  std::size_t delayed = 0;
  double rate = 0.0;
};

// Delay rate per group value, sorted by key (numerically for numeric keys).
// Empty groups never appear.
std::vector<RateRow> delay_rate_by(const FlightTable& table, GroupKey key, const LabelPolicy& policy, Task task);

// The group value a record falls in, as reported in RateRow::key.
std::string group_value(const FlightRecord& record, GroupKey key);

}  // namespace delaycast::ingest
