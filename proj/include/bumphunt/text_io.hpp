// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace bumphunt {

/// Shortest decimal that round-trips to the same double; NaN is written "NA".
std::string format_double(double value);

/// Parses a finite or NA ("NA" gives NaN) number; throws std::invalid_argument otherwise.
double parse_double(std::string_view text);
long long parse_integer(std::string_view text);

std::vector<std::string> split_tabs(std::string_view line);
std::vector<std::string> split_whitespace(std::string_view line);
std::string_view trim(std::string_view text);

/// Tab-delimited table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws std::out_of_range when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

Table read_table(std::istream& in);
Table read_table(const std::filesystem::path& path);
void write_table(const Table& table, std::ostream& out);
void write_table(const Table& table, const std::filesystem::path& path);

/// "key value" or "key = value" lines; '#' starts a comment. Later keys win.
using KeyValues = std::map<std::string, std::string, std::less<>>;
KeyValues read_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);

}  // namespace bumphunt
