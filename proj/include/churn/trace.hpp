#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "churn/civil_time.hpp"
#include "churn/csv.hpp"

namespace churn {

inline constexpr int kMinLevel = 1;
inline constexpr int kMaxLevel = 80;

// One 10-minute observation of one character.
struct SnapshotRecord {
  std::int64_t char_id = 0;
  int level = 1;
  std::string race;
  std::string char_class;
  std::string zone;
  std::optional<std::int64_t> guild_id;  // absent = unguilded at that instant
  Instant timestamp = 0;                 // snapped to a 10-minute boundary

  friend bool operator==(const SnapshotRecord&, const SnapshotRecord&) = default;
};

// Trace-wide ordering: (timestamp, char_id).
inline bool trace_order(const SnapshotRecord& a, const SnapshotRecord& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.char_id < b.char_id;
}

enum class HeaderMode { auto_detect, present, absent };

// Column mapping for delimited trace files. `columns` lists, in file order,
// one of: char, level, race, charclass, zone, guild, timestamp. An empty name
// (or "_") skips that column.
struct Schema {
  std::vector<std::string> columns{"char", "level", "race", "charclass",
                                   "zone", "guild", "timestamp"};
  char delimiter = ',';
  HeaderMode header = HeaderMode::auto_detect;
  TimestampFormat timestamp_format = TimestampFormat::iso;
  // Guild field values meaning "no guild". The empty string always does.
  std::vector<std::string> no_guild_tokens;
  // Closed vocabularies; an empty list disables the check for that field.
  std::vector<std::string> races;
  std::vector<std::string> classes;
  bool strict = false;

  // Throws std::invalid_argument if a required column is missing or repeated.
  void validate() const;
};

// Horde races and classes of the 2008 client.
std::vector<std::string> default_races();
std::vector<std::string> default_classes();

// Seven columns, comma, ISO timestamps, default vocabularies.
Schema default_schema();

enum class ParseErrorKind {
  column_count,
  bad_char_id,
  bad_level,
  level_out_of_range,
  bad_timestamp,
  bad_guild,
  unknown_race,
  unknown_class,
};

std::string_view to_string(ParseErrorKind kind);

struct LineError {
  std::string path;
  std::size_t line = 0;  // 1-based physical line
  ParseErrorKind kind = ParseErrorKind::column_count;
  std::string message;
};

// Parses one row. Unknown race/class is an error only when schema.strict is
// set; in lenient mode the value passes through.
std::variant<SnapshotRecord, LineError> parse_snapshot_line(std::string_view line,
                                                            const Schema& schema,
                                                            std::size_t line_no = 0);

// Formats a record in `schema`'s column order. Skipped columns are empty.
std::string format_snapshot(const SnapshotRecord& record, const Schema& schema);

std::string header_line(const Schema& schema);

struct IngestStats {
  std::uint64_t rows_read = 0;
  std::uint64_t rows_rejected = 0;
  std::uint64_t duplicates_dropped = 0;
  std::uint64_t accepted = 0;
  std::uint64_t vocabulary_passthrough = 0;  // lenient-mode unknown race/class rows
  std::uint64_t unique_characters = 0;
  std::uint64_t unique_levels = 0;
  std::uint64_t unique_races = 0;
  std::uint64_t unique_classes = 0;
  std::uint64_t unique_zones = 0;
  std::uint64_t unique_guilds = 0;
  std::uint64_t unique_timestamps = 0;
  std::optional<Instant> window_start;
  std::optional<Instant> window_end;
};

CsvTable stats_table(const IngestStats& stats);

struct IngestOptions {
  Schema schema = default_schema();
  // Rows held in memory before a sorted run is written to disk.
  std::size_t spill_threshold_rows = 4'000'000;
  std::filesystem::path temp_dir;  // empty: system temporary directory
  unsigned threads = 1;
  std::size_t max_error_details = 1000;
};

using RecordSink = std::function<void(const SnapshotRecord&)>;

// Parses, merges, sorts by (timestamp, char_id) and collapses duplicate
// (char_id, timestamp) pairs, keeping the row that appears first in argument
// order then line order. Records reach `sink` in sorted order.
//
// Throws DataError naming the path if any file is unreadable (checked before
// parsing starts), and in strict mode on the first rejected row.
IngestStats ingest_traces(std::span<const std::filesystem::path> paths,
                          const IngestOptions& options, const RecordSink& sink,
                          std::vector<LineError>* errors = nullptr);

struct IngestResult {
  std::vector<SnapshotRecord> records;
  IngestStats stats;
  std::vector<LineError> errors;
};

IngestResult ingest_traces(std::span<const std::filesystem::path> paths,
                           const IngestOptions& options = {});

// Records with start <= timestamp <= end. Throws std::invalid_argument when
// start > end.
std::vector<SnapshotRecord> window_filter(std::span<const SnapshotRecord> records,
                                          Instant start, Instant end);

// Writes records in the canonical schema with a header row.
void write_trace_file(const std::filesystem::path& path,
                      std::span<const SnapshotRecord> records);

}  // namespace churn
