#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cemfd {

// Shortest decimal string that parses back to the same double.
std::string format_number(double x);

// Strict parse of a full string; throws InvalidArgument on trailing junk.
double parse_number(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

std::string_view trim(std::string_view text);

// Comma-separated table with a header line.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(const std::vector<double>& values);
  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
};

void write_table(std::ostream& os, const Table& table);
Table read_table(std::istream& is);

void write_table_file(const std::string& path, const Table& table);
Table read_table_file(const std::string& path);

}  // namespace cemfd
