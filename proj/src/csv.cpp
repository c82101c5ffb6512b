#include "emal/csv.hpp"

#include "emal/common.hpp"

namespace emal::csv {

bool Reader::next(Row& row) {
  row.clear();
  int c = in_.get();
  if (c == EOF) return false;
  // Skip a UTF-8 byte order mark at the start of the stream.
  if (line_ == 1 && c == 0xEF) {
    if (in_.peek() == 0xBB) {
      in_.get();
      if (in_.peek() == 0xBF) in_.get();
      c = in_.get();
      if (c == EOF) return false;
    }
  }
  record_line_ = line_;

  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  auto push = [&] {
    if (field.empty() && !was_quoted) {
      row.emplace_back(std::nullopt);
    } else {
      row.emplace_back(std::move(field));
    }
    field.clear();
    was_quoted = false;
  };

  for (;; c = in_.get()) {
    if (quoted) {
      if (c == EOF) {
        throw ValidationError("line " + std::to_string(record_line_) + ": unterminated quoted field");
      }
      if (c == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_;
        field.push_back(static_cast<char>(c));
      }
      continue;
    }
    if (c == EOF || c == '\n') {
      if (c == '\n') ++line_;
      push();
      return true;
    }
    if (c == '\r') {
      if (in_.peek() == '\n') continue;
      ++line_;
      push();
      return true;
    }
    if (c == delim_) {
      push();
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else {
      field.push_back(static_cast<char>(c));
    }
  }
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(fields[i]);
  }
  return out;
}

}  // namespace emal::csv
