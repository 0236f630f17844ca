#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace delaycast::csv {

using Row = std::vector<std::string>;

// Streaming RFC-4180 reader: quoted fields, doubled quotes, embedded
// separators and line breaks, LF or CRLF record terminators.
class Reader {
 public:
  explicit Reader(std::istream& in, char separator = ',') : in_(in), sep_(separator) {}

  // Next record, or nullopt at end of input. A blank line yields a row
  // holding one empty field.
  std::optional<Row> next();

  // 1-based physical line on which the last returned record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  char sep_;
  std::size_t physical_line_ = 1;
  std::size_t record_line_ = 0;
};

// Quotes a field only when it contains the separator, a quote or a line break.
std::string escape(std::string_view field, char separator = ',');

void write_row(std::ostream& out, const Row& row, char separator = ',');

}  // namespace delaycast::csv
