#include "dosematch/csv.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "dosematch/errors.hpp"
#include "dosematch/io.hpp"

namespace dosematch::csv {

int Table::find(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::size_t Table::require(std::string_view name) const {
  int idx = find(name);
  if (idx < 0) {
    throw SchemaError(source + ": missing required column '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(idx);
}

Table read_file(const std::string& path) { return parse(read_text_file(path), path); }

Table parse(std::string_view text, const std::string& source) {
  // Skip a UTF-8 byte order mark.
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A blank line yields a single empty field; drop it.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) {
          throw ParseError(source + ":" + std::to_string(line) + ": stray quote inside field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError(source + ": unterminated quoted field");
  if (field_started || !record.empty()) end_record();

  Table table;
  table.source = source;
  if (records.empty()) throw SchemaError(source + ": empty file (no header row)");
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw ParseError(source + ": data row " + std::to_string(r) + " has " +
                       std::to_string(records[r].size()) + " fields, header has " +
                       std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_cell(std::string_view token, std::size_t row, std::string_view column,
                           const std::string& source, const char* why) {
  throw ParseError(source + ": row " + std::to_string(row) + ", column '" + std::string(column) +
                   "': " + why + " ('" + std::string(token) + "')");
}

}  // namespace

double parse_double(std::string_view token, std::size_t row, std::string_view column,
                    const std::string& source) {
  std::string_view t = trim(token);
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  double value = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    bad_cell(token, row, column, source, "not a number");
  }
  if (!std::isfinite(value)) bad_cell(token, row, column, source, "non-finite value");
  return value;
}

long long parse_int(std::string_view token, std::size_t row, std::string_view column,
                    const std::string& source) {
  std::string_view t = trim(token);
  long long value = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    bad_cell(token, row, column, source, "not an integer");
  }
  return value;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace dosematch::csv
