#include "delaycast/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "delaycast/csv.hpp"
#include "delaycast/error.hpp"
#include "delaycast/rng.hpp"

namespace delaycast::ingest {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> to_int(std::string_view s) {
  auto v = to_double(s);
  if (!v || std::fabs(*v - std::round(*v)) > 1e-9) return std::nullopt;
  return static_cast<int>(std::lround(*v));
}

std::optional<bool> to_flag(std::string_view s) {
  s = trim(s);
  if (s.empty()) return false;
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  auto v = to_double(s);
  if (!v) return std::nullopt;
  return *v != 0.0;
}

// "hhmm" (leading zeros optional); 2400 is midnight.
std::optional<int> to_clock_minutes(std::string_view s) {
  auto v = to_int(s);
  if (!v || *v < 0 || *v > 2400) return std::nullopt;
  const int h = *v / 100;
  const int m = *v % 100;
  if (m >= 60) return std::nullopt;
  return (h * 60 + m) % 1440;
}

std::string format_clock(int minutes) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d%02d", minutes / 60, minutes % 60);
  return buf;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool valid(const FlightRecord& r) {
  return r.month >= 1 && r.month <= 12 && r.day_of_week >= 1 && r.day_of_week <= 7 &&
         r.scheduled_dep_time >= 0 && r.scheduled_dep_time < 1440 && r.scheduled_arr_time >= 0 &&
         r.scheduled_arr_time < 1440 && r.distance_miles >= 0.0;
}

bool numeric_key(GroupKey key) {
  switch (key) {
    case GroupKey::Month:
    case GroupKey::DayOfWeek:
    case GroupKey::DepHour:
    case GroupKey::ArrHour:
    case GroupKey::DistanceGroup:
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

Date parse_date(const std::string& text) {
  const std::string_view s = trim(text);
  int a = 0, b = 0, c = 0;
  char sep1 = 0, sep2 = 0;
  std::istringstream in{std::string(s)};
  if (!(in >> a >> sep1 >> b >> sep2 >> c)) throw DomainError("unparseable date '" + text + "'");
  Date d;
  if (sep1 == '-' && sep2 == '-') {
    d = {a, b, c};
  } else if (sep1 == '/' && sep2 == '/') {
    d = {c, a, b};
  } else {
    throw DomainError("unparseable date '" + text + "'");
  }
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) {
    throw DomainError("date out of range '" + text + "'");
  }
  return d;
}

int weekday(const Date& date) {
  // Sakamoto's method gives 0 = Sunday.
  static constexpr int offsets[] = {0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4};
  int y = date.year;
  if (date.month < 3) --y;
  const int w = (y + y / 4 - y / 100 + y / 400 + offsets[date.month - 1] + date.day) % 7;
  return w == 0 ? 7 : w;
}

std::string SkipReport::summary() const {
  std::ostringstream out;
  out << "rows read:      " << rows_read << '\n'
      << "rows kept:      " << kept << '\n'
      << "rows skipped:   " << skipped() << '\n'
      << "  missing delay: " << missing_delay << '\n'
      << "  cancelled:     " << cancelled << '\n'
      << "  diverted:      " << diverted << '\n'
      << "  malformed:     " << malformed << '\n';
  return out.str();
}

ParseResult parse_records(std::istream& csv_source, const ColumnMap& columns) {
  csv::Reader reader(csv_source);
  auto header = reader.next();
  if (!header || (header->size() == 1 && trim((*header)[0]).empty())) {
    throw EmptyTableError("CSV source is empty (no header row)");
  }
  if (!header->empty() && header->front().starts_with("\xEF\xBB\xBF")) header->front().erase(0, 3);

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header->size(); ++i) position.emplace(std::string(trim((*header)[i])), i);

  // -1 marks an optional field that is not mapped.
  auto locate = [&](const std::string& column, const char* field, bool optional) -> long {
    if (column.empty()) {
      if (optional) return -1;
      throw SchemaError(std::string("no source column mapped for required field '") + field + "'");
    }
    auto it = position.find(column);
    if (it == position.end()) {
      throw SchemaError("missing column '" + column + "' (mapped to field '" + field + "')");
    }
    return static_cast<long>(it->second);
  };

  const long c_date = locate(columns.flight_date, "flight_date", false);
  const long c_year = locate(columns.year, "year", true);
  const long c_month = locate(columns.month, "month", true);
  const long c_dow = locate(columns.day_of_week, "day_of_week", true);
  const long c_mkt = locate(columns.marketing_carrier, "marketing_carrier", false);
  const long c_op = locate(columns.operating_carrier, "operating_carrier", false);
  const long c_orig = locate(columns.origin_state, "origin_state", false);
  const long c_dest = locate(columns.dest_state, "dest_state", false);
  const long c_dep_t = locate(columns.scheduled_dep_time, "scheduled_dep_time", false);
  const long c_arr_t = locate(columns.scheduled_arr_time, "scheduled_arr_time", false);
  const long c_dep_d = locate(columns.dep_delay_minutes, "dep_delay_minutes", false);
  const long c_arr_d = locate(columns.arr_delay_minutes, "arr_delay_minutes", false);
  const long c_dist = locate(columns.distance_miles, "distance_miles", false);
  const long c_canc = locate(columns.cancelled, "cancelled", true);
  const long c_div = locate(columns.diverted, "diverted", true);

  ParseResult result;
  SkipReport& skips = result.skips;
  while (auto row = reader.next()) {
    if (row->size() == 1 && trim((*row)[0]).empty()) continue;  // blank line
    ++skips.rows_read;
    if (row->size() < header->size()) {
      ++skips.malformed;
      continue;
    }
    auto field = [&](long col) -> std::string_view { return (*row)[static_cast<std::size_t>(col)]; };

    const auto cancelled = c_canc < 0 ? std::optional<bool>(false) : to_flag(field(c_canc));
    const auto diverted = c_div < 0 ? std::optional<bool>(false) : to_flag(field(c_div));
    if (!cancelled || !diverted) {
      ++skips.malformed;
      continue;
    }
    if (*cancelled) {
      ++skips.cancelled;
      continue;
    }
    if (*diverted) {
      ++skips.diverted;
      continue;
    }
    const auto dep_delay = to_double(field(c_dep_d));
    const auto arr_delay = to_double(field(c_arr_d));
    if (!dep_delay || !arr_delay) {
      ++skips.missing_delay;
      continue;
    }

    FlightRecord r;
    try {
      r.flight_date = parse_date(std::string(field(c_date)));
    } catch (const DomainError&) {
      ++skips.malformed;
      continue;
    }
    const auto year = c_year < 0 ? std::optional<int>(r.flight_date.year) : to_int(field(c_year));
    const auto month = c_month < 0 ? std::optional<int>(r.flight_date.month) : to_int(field(c_month));
    const auto dow = c_dow < 0 ? std::optional<int>(weekday(r.flight_date)) : to_int(field(c_dow));
    const auto dep_t = to_clock_minutes(field(c_dep_t));
    const auto arr_t = to_clock_minutes(field(c_arr_t));
    const auto dist = to_double(field(c_dist));
    if (!year || !month || !dow || !dep_t || !arr_t || !dist) {
      ++skips.malformed;
      continue;
    }
    r.year = *year;
    r.month = *month;
    r.day_of_week = *dow;
    r.marketing_carrier = std::string(trim(field(c_mkt)));
    r.operating_carrier = std::string(trim(field(c_op)));
    r.origin_state = std::string(trim(field(c_orig)));
    r.dest_state = std::string(trim(field(c_dest)));
    r.scheduled_dep_time = *dep_t;
    r.scheduled_arr_time = *arr_t;
    r.dep_delay_minutes = static_cast<int>(std::lround(*dep_delay));
    r.arr_delay_minutes = static_cast<int>(std::lround(*arr_delay));
    r.distance_miles = *dist;
    if (!valid(r)) {
      ++skips.malformed;
      continue;
    }
    result.table.push_back(std::move(r));
    ++skips.kept;
  }
  return result;
}

ParseResult parse_records_file(const std::string& path, const ColumnMap& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_records(in, columns);
}

void write_records(std::ostream& out, const FlightTable& table) {
  const ColumnMap c;
  csv::write_row(out, {c.flight_date, c.year, c.month, c.day_of_week, c.marketing_carrier, c.operating_carrier,
                       c.origin_state, c.dest_state, c.scheduled_dep_time, c.scheduled_arr_time,
                       c.dep_delay_minutes, c.arr_delay_minutes, c.distance_miles, c.cancelled, c.diverted});
  for (const auto& r : table) {
    csv::write_row(out, {r.flight_date.to_string(), std::to_string(r.year), std::to_string(r.month),
                         std::to_string(r.day_of_week), r.marketing_carrier, r.operating_carrier, r.origin_state,
                         r.dest_state, format_clock(r.scheduled_dep_time), format_clock(r.scheduled_arr_time),
                         std::to_string(r.dep_delay_minutes), std::to_string(r.arr_delay_minutes),
                         format_number(r.distance_miles), r.cancelled ? "1" : "0", r.diverted ? "1" : "0"});
  }
}

DelayLabels derive_labels(const FlightRecord& record, int threshold_minutes) {
  return derive_labels(record, LabelPolicy{threshold_minutes, TotalDelayRule::Either});
}

DelayLabels derive_labels(const FlightRecord& record, const LabelPolicy& policy) {
  DelayLabels out;
  out.departure_delayed = record.dep_delay_minutes >= policy.threshold_minutes ? 1 : 0;
  out.arrival_delayed = record.arr_delay_minutes >= policy.threshold_minutes ? 1 : 0;
  out.total_delayed = policy.total_rule == TotalDelayRule::Either
                          ? static_cast<std::uint8_t>(out.departure_delayed | out.arrival_delayed)
                          : out.arrival_delayed;
  return out;
}

std::uint8_t label_for(const DelayLabels& labels, Task task) {
  switch (task) {
    case Task::Departure: return labels.departure_delayed;
    case Task::Arrival: return labels.arrival_delayed;
    case Task::Total: return labels.total_delayed;
  }
  return 0;
}

std::string to_string(Task task) {
  switch (task) {
    case Task::Departure: return "departure";
    case Task::Arrival: return "arrival";
    case Task::Total: return "total";
  }
  return "?";
}

Task parse_task(const std::string& name) {
  if (name == "departure") return Task::Departure;
  if (name == "arrival") return Task::Arrival;
  if (name == "total") return Task::Total;
  throw ConfigError("unknown task '" + name + "' (expected departure, arrival or total)");
}

int distance_group(double distance_miles) {
  if (!(distance_miles >= 0.0)) throw DomainError("distance must be non-negative");
  return static_cast<int>(std::min(std::floor(distance_miles / 250.0), 10.0));
}

Haul haul_category(double distance_miles) {
  if (!(distance_miles >= 0.0)) throw DomainError("distance must be non-negative");
  if (distance_miles < 800.0) return Haul::Short;
  if (distance_miles <= 2200.0) return Haul::Medium;
  return Haul::Long;
}

std::string to_string(Haul haul) {
  switch (haul) {
    case Haul::Short: return "Short";
    case Haul::Medium: return "Medium";
    case Haul::Long: return "Long";
  }
  return "?";
}

FlightTable stratified_monthly_sample(const FlightTable& table, int n_per_month, std::uint64_t seed,
                                      std::vector<std::string>* warnings) {
  if (table.empty()) throw EmptyTableError("cannot sample an empty table");
  if (n_per_month < 1) throw DomainError("n_per_month must be >= 1");

  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < table.size(); ++i) groups[{table[i].year, table[i].month}].push_back(i);

  std::vector<std::size_t> keep;
  for (const auto& [ym, rows] : groups) {
    const auto n = static_cast<std::size_t>(n_per_month);
    if (rows.size() < n && warnings) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%04d-%02d has %zu rows, fewer than the requested %zu; keeping all", ym.first,
                    ym.second, rows.size(), n);
      warnings->emplace_back(buf);
    }
    Rng rng(Rng::derive_seed(seed, static_cast<std::uint64_t>(ym.first) * 12 + static_cast<std::uint64_t>(ym.second)));
    for (auto pick : sample_without_replacement(rows.size(), n, rng)) keep.push_back(rows[pick]);
  }
  std::sort(keep.begin(), keep.end());

  FlightTable out;
  out.reserve(keep.size());
  for (auto i : keep) out.push_back(table[i]);
  return out;
}

std::string to_string(GroupKey key) {
  switch (key) {
    case GroupKey::OriginState: return "state";
    case GroupKey::Month: return "month";
    case GroupKey::DayOfWeek: return "day_of_week";
    case GroupKey::DepHour: return "dep_hour";
    case GroupKey::ArrHour: return "arr_hour";
    case GroupKey::DistanceGroup: return "distance_group";
    case GroupKey::Haul: return "haul";
    case GroupKey::MarketingCarrier: return "marketing_carrier";
    case GroupKey::OperatingCarrier: return "operating_carrier";
  }
  return "?";
}

std::vector<GroupKey> all_group_keys() {
  return {GroupKey::OriginState,   GroupKey::Month, GroupKey::DayOfWeek,        GroupKey::DepHour,
          GroupKey::ArrHour,       GroupKey::DistanceGroup, GroupKey::Haul, GroupKey::MarketingCarrier,
          GroupKey::OperatingCarrier};
}

GroupKey parse_group_key(const std::string& name) {
  for (auto key : all_group_keys()) {
    if (to_string(key) == name) return key;
  }
  throw ConfigError("unknown grouping key '" + name + "'");
}

std::string group_value(const FlightRecord& r, GroupKey key) {
  switch (key) {
    case GroupKey::OriginState: return r.origin_state;
    case GroupKey::Month: return std::to_string(r.month);
    case GroupKey::DayOfWeek: return std::to_string(r.day_of_week);
    case GroupKey::DepHour: return std::to_string(r.scheduled_dep_time / 60);
    case GroupKey::ArrHour: return std::to_string(r.scheduled_arr_time / 60);
    case GroupKey::DistanceGroup: return std::to_string(distance_group(r.distance_miles));
    case GroupKey::Haul: return to_string(haul_category(r.distance_miles));
    case GroupKey::MarketingCarrier: return r.marketing_carrier;
    case GroupKey::OperatingCarrier: return r.operating_carrier;
  }
  return {};
}

std::vector<RateRow> delay_rate_by(const FlightTable& table, GroupKey key, const LabelPolicy& policy, Task task) {
  if (table.empty()) throw EmptyTableError("cannot aggregate an empty table");

  std::map<std::string, RateRow> groups;
  for (const auto& r : table) {
    auto& row = groups[group_value(r, key)];
    ++row.flights;
    row.delayed += label_for(derive_labels(r, policy), task);
  }

  std::vector<RateRow> out;
  out.reserve(groups.size());
  for (auto& [value, row] : groups) {
    row.key = value;
    row.rate = static_cast<double>(row.delayed) / static_cast<double>(row.flights);
    out.push_back(row);
  }
  if (numeric_key(key)) {
    std::sort(out.begin(), out.end(),
              [](const RateRow& a, const RateRow& b) { return std::stoi(a.key) < std::stoi(b.key); });
  }
  return out;
}

}  // namespace delaycast::ingest
