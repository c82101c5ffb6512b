#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emal::csv {

/// One parsed row. Unquoted empty fields come back as std::nullopt so callers
/// can tell a missing value from an explicitly quoted empty string.
using Row = std::vector<std::optional<std::string>>;

/// Streaming reader for comma-separated text with RFC 4180 quoting
/// (embedded commas, doubled quotes, newlines inside quotes).
class Reader {
 public:
  explicit Reader(std::istream& in, char delimiter = ',') : in_(in), delim_(delimiter) {}

  /// Reads the next record; false at end of input.
  bool next(Row& row);
  /// 1-based line number where the most recently returned record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  char delim_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

/// Quotes a field when needed.
std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

}  // namespace emal::csv
