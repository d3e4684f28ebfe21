#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace l2m::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Index of a header column; throws MissingColumn.
  std::size_t column(const std::string& name) const;
  std::optional<std::size_t> find_column(const std::string& name) const;
};

/// Splits one record. Double-quoted fields may contain the delimiter; "" is an escaped quote.
std::vector<std::string> split_record(std::string_view line, char delimiter);

/// Reads a file with a required header row. Blank lines are skipped; rows whose
/// field count differs from the header raise ParseError.
Table read(const std::filesystem::path& path, char delimiter = ',');

std::optional<double> parse_double(std::string_view text);

/// Shortest text that round-trips the value exactly.
std::string format_double(double value);

}  // namespace l2m::csv
