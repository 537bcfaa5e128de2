#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace churn {

// Splits one physical line into fields. Double-quoted fields may contain the
// delimiter and doubled quotes (""); a field that opens a quote and never
// closes it is taken verbatim to end of line.
std::vector<std::string> split_csv_line(std::string_view line, char delimiter = ',');

// Same, but reuses `out` to avoid reallocating per row.
void split_csv_line(std::string_view line, char delimiter, std::vector<std::string>& out);

// Quotes a field only when needed (delimiter, quote, CR or LF inside).
std::string csv_escape(std::string_view field, char delimiter = ',');

std::string join_csv_row(const std::vector<std::string>& fields, char delimiter = ',');

// A header plus string rows. Numeric tables are formatted by the caller so
// every emitter controls its own precision.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Reads a whole CSV document, including quoted fields that span lines.
CsvTable read_csv(std::istream& in, char delimiter = ',');
CsvTable read_csv_file(const std::filesystem::path& path, char delimiter = ',');

void write_csv(std::ostream& out, const CsvTable& table, char delimiter = ',');

// Throws std::runtime_error naming the path when the file cannot be written.
void write_csv_file(const std::filesystem::path& path, const CsvTable& table,
                    char delimiter = ',');

// Shortest text that parses back to exactly `value`.
std::string format_double(double value);

// Fixed number of decimals, for human-facing reports.
std::string format_fixed(double value, int decimals);

}  // namespace churn
