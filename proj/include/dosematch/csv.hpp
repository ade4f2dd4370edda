#pragma once

// Minimal RFC 4180 reader/writer: comma separator, double-quote quoting,
// first row is the header. Enough for the flat extracts this project reads.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dosematch::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string source;  // file name, for error messages

  /// Index of `name` in the header, or -1.
  int find(std::string_view name) const;
  /// Index of `name`; throws SchemaError naming the column when absent.
  std::size_t require(std::string_view name) const;
};

Table read_file(const std::string& path);
Table parse(std::string_view text, const std::string& source = "<memory>");

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Strict full-token double parse (no trailing garbage); throws ParseError
/// with `row` (1-based data row) and `column` in the message.
double parse_double(std::string_view token, std::size_t row, std::string_view column,
                    const std::string& source);
long long parse_int(std::string_view token, std::size_t row, std::string_view column,
                    const std::string& source);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace dosematch::csv
