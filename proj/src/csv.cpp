#include "churn/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace churn {

void split_csv_line(std::string_view line, char delimiter, std::vector<std::string>& out) {
  out.clear();
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::string field;
  std::size_t i = 0;
  const std::size_t n = line.size();
  while (true) {
    field.clear();
    if (i < n && line[i] == '"') {
      ++i;
      bool closed = false;
      while (i < n) {
        if (line[i] == '"') {
          if (i + 1 < n && line[i + 1] == '"') {
            field.push_back('"');
            i += 2;
          } else {
            ++i;
            closed = true;
            break;
          }
        } else {
          field.push_back(line[i++]);
        }
      }
      // Anything between the closing quote and the delimiter is kept.
      while (closed && i < n && line[i] != delimiter) field.push_back(line[i++]);
    } else {
      const std::size_t end = line.find(delimiter, i);
      const std::size_t stop = end == std::string_view::npos ? n : end;
      field.assign(line.substr(i, stop - i));
      i = stop;
    }
    out.push_back(field);
    if (i >= n) break;
    ++i;  // delimiter
    if (i == n) {
      out.emplace_back();
      break;
    }
  }
}

std::vector<std::string> split_csv_line(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  split_csv_line(line, delimiter, out);
  return out;
}

std::string csv_escape(std::string_view field, char delimiter) {
  const bool needs_quotes = field.find_first_of(std::string{delimiter, '"', '\r', '\n'}) !=
                            std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join_csv_row(const std::vector<std::string>& fields, char delimiter) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(delimiter);
    out += csv_escape(fields[i], delimiter);
  }
  return out;
}

CsvTable read_csv(std::istream& in, char delimiter) {
  CsvTable table;
  std::string line;
  std::string record;
  bool first = true;
  while (std::getline(in, line)) {
    record = line;
    // A record continues while it holds an odd number of quotes.
    auto quotes = [](const std::string& s) {
      std::size_t q = 0;
      for (const char c : s) q += (c == '"');
      return q;
    };
    while (quotes(record) % 2 == 1 && std::getline(in, line)) {
      record.push_back('\n');
      record += line;
    }
    auto fields = split_csv_line(record, delimiter);
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  return table;
}

CsvTable read_csv_file(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_csv(in, delimiter);
}

void write_csv(std::ostream& out, const CsvTable& table, char delimiter) {
  out << join_csv_row(table.header, delimiter) << '\n';
  for (const auto& row : table.rows) out << join_csv_row(row, delimiter) << '\n';
}

void write_csv_file(const std::filesystem::path& path, const CsvTable& table,
                    char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(out, table, delimiter);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

std::string format_fixed(double value, int decimals) {
  if (!std::isfinite(value)) return format_double(value);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

}  // namespace churn
