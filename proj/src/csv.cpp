#include "delaycast/csv.hpp"

namespace delaycast::csv {

std::optional<Row> Reader::next() {
  int c = in_.get();
  if (c == std::char_traits<char>::eof()) return std::nullopt;

  record_line_ = physical_line_;
  Row row;
  std::string field;
  bool quoted = false;
  bool after_quote = false;  // just closed a quoted section

  for (;; c = in_.get()) {
    if (c == std::char_traits<char>::eof()) {
      row.push_back(std::move(field));
      return row;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          field.push_back('"');
          in_.get();
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (ch == '\n') ++physical_line_;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == sep_) {
      row.push_back(std::move(field));
      field.clear();
      after_quote = false;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && in_.peek() == '\n') in_.get();
      ++physical_line_;
      row.push_back(std::move(field));
      return row;
    } else if (ch == '"' && field.empty() && !after_quote) {
      quoted = true;
    } else {
      // Stray characters after a closing quote are kept verbatim.
      field.push_back(ch);
    }
  }
}

std::string escape(std::string_view field, char separator) {
  const bool needs_quotes = field.find_first_of(std::string{separator, '"', '\n', '\r'}) != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const Row& row, char separator) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << separator;
    out << escape(row[i], separator);
  }
  out << '\n';
}

}  // namespace delaycast::csv
