#include "churn/trace.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <mutex>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "churn/error.hpp"

#include <unistd.h>

namespace churn {

namespace {

constexpr std::string_view kColumnNames[] = {"char", "level", "race", "charclass",
                                             "zone", "guild", "timestamp"};

enum Column { kChar, kLevel, kRace, kClass, kZone, kGuild, kTimestamp, kSkip };

Column column_of(std::string_view name) {
  for (int i = 0; i < 7; ++i) {
    if (name == kColumnNames[i]) return static_cast<Column>(i);
  }
  return kSkip;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool contains(const std::vector<std::string>& vocab, std::string_view value) {
  return std::find(vocab.begin(), vocab.end(), value) != vocab.end();
}

LineError make_error(std::size_t line_no, ParseErrorKind kind, std::string message) {
  LineError e;
  e.line = line_no;
  e.kind = kind;
  e.message = std::move(message);
  return e;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool looks_like_header(std::string_view line, const Schema& schema) {
  for (const auto& field : split_csv_line(line, schema.delimiter)) {
    const auto f = lower(trim(field));
    if (f == "timestamp" || f == "char" || f == "char_id") return true;
  }
  return false;
}

// Sort key carrying input position so "first occurrence" survives sorting.
struct Keyed {
  SnapshotRecord record;
  std::uint64_t seq = 0;  // (file index << 40) | line number
};

bool keyed_less(const Keyed& a, const Keyed& b) {
  if (a.record.timestamp != b.record.timestamp) return a.record.timestamp < b.record.timestamp;
  if (a.record.char_id != b.record.char_id) return a.record.char_id < b.record.char_id;
  return a.seq < b.seq;
}

Schema run_schema() {
  Schema s;
  s.header = HeaderMode::absent;
  return s;
}

// Sorted run spilled to disk: "seq,<canonical record>" per line.
class RunWriter {
 public:
  static std::filesystem::path write(const std::filesystem::path& dir, std::size_t index,
                                     std::vector<Keyed>& rows) {
    std::sort(rows.begin(), rows.end(), keyed_less);
    std::ostringstream name;
    name << "churn-run-" << ::getpid() << '-' << std::this_thread::get_id() << '-' << index << '-'
         << reinterpret_cast<std::uintptr_t>(&rows) << ".tmp";
    auto path = dir / name.str();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot create spill file " + path.string());
    const Schema schema = run_schema();
    for (const auto& k : rows) out << k.seq << ',' << format_snapshot(k.record, schema) << '\n';
    if (!out) throw DataError("write failed for spill file " + path.string());
    return path;
  }
};

class RunReader {
 public:
  explicit RunReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw DataError("cannot reopen spill file " + path.string());
  }

  bool next(Keyed& out) {
    if (!std::getline(in_, line_)) return false;
    const auto comma = line_.find(',');
    std::string_view view(line_);
    std::uint64_t seq = 0;
    parse_int(view.substr(0, comma), seq);
    auto parsed = parse_snapshot_line(view.substr(comma + 1), schema_);
    if (auto* rec = std::get_if<SnapshotRecord>(&parsed)) {
      out.record = std::move(*rec);
      out.seq = seq;
      return true;
    }
    throw DataError("corrupt spill file line: " + line_);
  }

 private:
  std::ifstream in_;
  std::string line_;
  Schema schema_ = run_schema();
};

}  // namespace

void Schema::validate() const {
  int seen[7] = {};
  for (const auto& name : columns) {
    if (name.empty() || name == "_") continue;
    const Column c = column_of(name);
    if (c == kSkip) throw std::invalid_argument("unknown schema column '" + name + "'");
    ++seen[c];
  }
  for (int i = 0; i < 7; ++i) {
    if (seen[i] != 1) {
      throw std::invalid_argument("schema must name column '" + std::string(kColumnNames[i]) +
                                  "' exactly once");
    }
  }
}

std::vector<std::string> default_races() {
  return {"Blood Elf", "Orc", "Tauren", "Troll", "Undead"};
}

std::vector<std::string> default_classes() {
  return {"Death Knight", "Druid",  "Hunter",  "Mage",    "Paladin",
          "Priest",       "Rogue",  "Shaman",  "Warlock", "Warrior"};
}

Schema default_schema() {
  Schema s;
  s.races = default_races();
  s.classes = default_classes();
  return s;
}

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::column_count: return "column_count";
    case ParseErrorKind::bad_char_id: return "bad_char_id";
    case ParseErrorKind::bad_level: return "bad_level";
    case ParseErrorKind::level_out_of_range: return "level_out_of_range";
    case ParseErrorKind::bad_timestamp: return "bad_timestamp";
    case ParseErrorKind::bad_guild: return "bad_guild";
    case ParseErrorKind::unknown_race: return "unknown_race";
    case ParseErrorKind::unknown_class: return "unknown_class";
  }
  return "unknown";
}

std::variant<SnapshotRecord, LineError> parse_snapshot_line(std::string_view line,
                                                            const Schema& schema,
                                                            std::size_t line_no) {
  thread_local std::vector<std::string> fields;
  split_csv_line(line, schema.delimiter, fields);
  if (fields.size() != schema.columns.size()) {
    return make_error(line_no, ParseErrorKind::column_count,
                      "expected " + std::to_string(schema.columns.size()) + " columns, got " +
                          std::to_string(fields.size()));
  }
  SnapshotRecord rec;
  // Level bounds are reported ahead of any other field problem on the row.
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (column_of(schema.columns[i]) != kLevel) continue;
    const std::string_view value = trim(fields[i]);
    if (!parse_int(value, rec.level)) {
      return make_error(line_no, ParseErrorKind::bad_level,
                        "malformed level '" + std::string(value) + "'");
    }
    if (rec.level < kMinLevel || rec.level > kMaxLevel) {
      return make_error(line_no, ParseErrorKind::level_out_of_range,
                        "level " + std::to_string(rec.level) + " outside 1..80");
    }
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string_view value = trim(fields[i]);
    switch (column_of(schema.columns[i])) {
      case kChar:
        if (!parse_int(value, rec.char_id)) {
          return make_error(line_no, ParseErrorKind::bad_char_id,
                            "malformed char id '" + std::string(value) + "'");
        }
        break;
      case kLevel:
        break;
      case kRace:
        rec.race = value;
        break;
      case kClass:
        rec.char_class = value;
        break;
      case kZone:
        rec.zone = value;
        break;
      case kGuild:
        if (value.empty() || contains(schema.no_guild_tokens, value)) {
          rec.guild_id.reset();
        } else {
          std::int64_t g = 0;
          if (!parse_int(value, g)) {
            return make_error(line_no, ParseErrorKind::bad_guild,
                              "malformed guild '" + std::string(value) + "'");
          }
          rec.guild_id = g;
        }
        break;
      case kTimestamp: {
        const auto t = parse_timestamp(value, schema.timestamp_format);
        if (!t) {
          return make_error(line_no, ParseErrorKind::bad_timestamp,
                            "malformed timestamp '" + std::string(value) + "'");
        }
        rec.timestamp = snap_to_slot(*t);
        break;
      }
      case kSkip:
        break;
    }
  }
  if (schema.strict) {
    if (!schema.races.empty() && !contains(schema.races, rec.race)) {
      return make_error(line_no, ParseErrorKind::unknown_race, "unknown race '" + rec.race + "'");
    }
    if (!schema.classes.empty() && !contains(schema.classes, rec.char_class)) {
      return make_error(line_no, ParseErrorKind::unknown_class,
                        "unknown class '" + rec.char_class + "'");
    }
  }
  return rec;
}

std::string format_snapshot(const SnapshotRecord& record, const Schema& schema) {
  std::vector<std::string> fields;
  fields.reserve(schema.columns.size());
  for (const auto& name : schema.columns) {
    switch (column_of(name)) {
      case kChar: fields.push_back(std::to_string(record.char_id)); break;
      case kLevel: fields.push_back(std::to_string(record.level)); break;
      case kRace: fields.push_back(record.race); break;
      case kClass: fields.push_back(record.char_class); break;
      case kZone: fields.push_back(record.zone); break;
      case kGuild:
        fields.push_back(record.guild_id ? std::to_string(*record.guild_id) : std::string{});
        break;
      case kTimestamp: {
        if (schema.timestamp_format == TimestampFormat::iso) {
          fields.push_back(format_timestamp(record.timestamp));
        } else {
          const auto c = to_civil(record.timestamp);
          char buf[32];
          std::snprintf(buf, sizeof buf, "%02u/%02u/%02d %02d:%02d:%02d", c.month, c.day,
                        c.year % 100, c.hour, c.minute, c.second);
          fields.push_back(buf);
        }
        break;
      }
      case kSkip: fields.emplace_back(); break;
    }
  }
  return join_csv_row(fields, schema.delimiter);
}

std::string header_line(const Schema& schema) {
  std::vector<std::string> names;
  for (const auto& c : schema.columns) names.push_back(c == "_" ? std::string{} : c);
  return join_csv_row(names, schema.delimiter);
}

CsvTable stats_table(const IngestStats& s) {
  CsvTable t;
  t.header = {"name", "value"};
  auto add = [&](const char* name, std::uint64_t v) {
    t.rows.push_back({name, std::to_string(v)});
  };
  add("rows_read", s.rows_read);
  add("rows_rejected", s.rows_rejected);
  add("duplicates_dropped", s.duplicates_dropped);
  add("accepted", s.accepted);
  add("vocabulary_passthrough", s.vocabulary_passthrough);
  add("unique_characters", s.unique_characters);
  add("unique_levels", s.unique_levels);
  add("unique_races", s.unique_races);
  add("unique_classes", s.unique_classes);
  add("unique_zones", s.unique_zones);
  add("unique_guilds", s.unique_guilds);
  add("unique_timestamps", s.unique_timestamps);
  t.rows.push_back({"window_start", s.window_start ? format_timestamp(*s.window_start) : ""});
  t.rows.push_back({"window_end", s.window_end ? format_timestamp(*s.window_end) : ""});
  return t;
}

IngestStats ingest_traces(std::span<const std::filesystem::path> paths,
                          const IngestOptions& options, const RecordSink& sink,
                          std::vector<LineError>* errors) {
  const Schema& schema = options.schema;
  schema.validate();
  if (paths.size() >= (1u << 23)) throw std::invalid_argument("too many input files");
  for (const auto& p : paths) {
    std::ifstream probe(p, std::ios::binary);
    if (!probe) throw DataError("cannot read trace file " + p.string());
  }
  const auto temp_dir = options.temp_dir.empty() ? std::filesystem::temp_directory_path()
                                                 : options.temp_dir;
  const std::size_t threshold = std::max<std::size_t>(options.spill_threshold_rows, 1);

  std::mutex mu;
  std::vector<Keyed> buffer;
  std::vector<std::filesystem::path> runs;
  std::vector<LineError> all_errors;
  std::uint64_t rows_read = 0, rows_rejected = 0, passthrough = 0;
  std::atomic<bool> abort{false};
  std::atomic<std::size_t> next_file{0};

  auto flush = [&](std::vector<Keyed>& local) {
    std::lock_guard lock(mu);
    for (auto& k : local) buffer.push_back(std::move(k));
    local.clear();
    if (buffer.size() >= threshold) {
      runs.push_back(RunWriter::write(temp_dir, runs.size(), buffer));
      buffer.clear();
    }
  };

  auto worker = [&]() {
    std::vector<Keyed> local;
    std::vector<LineError> local_errors;
    std::uint64_t read = 0, rejected = 0, unknown_vocab = 0;
    for (std::size_t f = next_file++; f < paths.size() && !abort; f = next_file++) {
      std::ifstream in(paths[f], std::ios::binary);
      if (!in) throw DataError("cannot read trace file " + paths[f].string());
      std::string line;
      std::size_t line_no = 0;
      bool first_content = true;
      while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        if (first_content) {
          first_content = false;
          const bool header = schema.header == HeaderMode::present ||
                              (schema.header == HeaderMode::auto_detect &&
                               looks_like_header(line, schema));
          if (header) continue;
        }
        ++read;
        auto parsed = parse_snapshot_line(line, schema, line_no);
        if (auto* err = std::get_if<LineError>(&parsed)) {
          ++rejected;
          err->path = paths[f].string();
          local_errors.push_back(std::move(*err));
          if (schema.strict) {
            abort = true;
            break;
          }
          continue;
        }
        auto& rec = std::get<SnapshotRecord>(parsed);
        if ((!schema.races.empty() && !contains(schema.races, rec.race)) ||
            (!schema.classes.empty() && !contains(schema.classes, rec.char_class))) {
          ++unknown_vocab;
        }
        local.push_back({std::move(rec), (static_cast<std::uint64_t>(f) << 40) | line_no});
        if (local.size() >= 65536) flush(local);
      }
    }
    flush(local);
    std::lock_guard lock(mu);
    rows_read += read;
    rows_rejected += rejected;
    passthrough += unknown_vocab;
    for (auto& e : local_errors) all_errors.push_back(std::move(e));
  };

  auto cleanup = [&]() {
    std::error_code ec;
    for (const auto& r : runs) std::filesystem::remove(r, ec);
  };

  try {
    const unsigned n_threads =
        std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(paths.size())));
    if (n_threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> failures(n_threads);
      for (unsigned t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t] {
          try {
            worker();
          } catch (...) {
            failures[t] = std::current_exception();
            abort = true;
          }
        });
      }
      for (auto& th : pool) th.join();
      for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
      }
    }
  } catch (...) {
    cleanup();
    throw;
  }

  std::sort(all_errors.begin(), all_errors.end(), [&](const LineError& a, const LineError& b) {
    if (a.path != b.path) {
      // Argument order, not lexical order.
      auto pos = [&](const std::string& p) {
        for (std::size_t i = 0; i < paths.size(); ++i) {
          if (paths[i].string() == p) return i;
        }
        return paths.size();
      };
      return pos(a.path) < pos(b.path);
    }
    return a.line < b.line;
  });
  if (schema.strict && !all_errors.empty()) {
    cleanup();
    const auto& e = all_errors.front();
    throw DataError(e.path + ":" + std::to_string(e.line) + ": " + e.message);
  }
  if (errors) {
    const std::size_t keep = std::min(all_errors.size(), options.max_error_details);
    errors->assign(std::make_move_iterator(all_errors.begin()),
                   std::make_move_iterator(all_errors.begin() + keep));
  }

  IngestStats stats;
  stats.rows_read = rows_read;
  stats.rows_rejected = rows_rejected;
  stats.vocabulary_passthrough = passthrough;

  std::unordered_set<std::int64_t> chars, guilds;
  std::unordered_set<int> levels;
  std::unordered_set<std::string> zones, races, classes;
  bool have_last = false;
  Instant last_ts = 0;
  std::int64_t last_char = 0;

  auto emit = [&](const Keyed& k) {
    const auto& r = k.record;
    if (have_last && r.timestamp == last_ts && r.char_id == last_char) {
      ++stats.duplicates_dropped;
      return;
    }
    if (!have_last || r.timestamp != last_ts) ++stats.unique_timestamps;
    have_last = true;
    last_ts = r.timestamp;
    last_char = r.char_id;
    ++stats.accepted;
    chars.insert(r.char_id);
    levels.insert(r.level);
    if (r.guild_id) guilds.insert(*r.guild_id);
    if (!zones.contains(r.zone)) zones.insert(r.zone);
    if (!races.contains(r.race)) races.insert(r.race);
    if (!classes.contains(r.char_class)) classes.insert(r.char_class);
    if (!stats.window_start) stats.window_start = r.timestamp;
    stats.window_end = r.timestamp;
    sink(r);
  };

  std::sort(buffer.begin(), buffer.end(), keyed_less);
  try {
    if (runs.empty()) {
      for (const auto& k : buffer) emit(k);
    } else {
      // k-way merge of the spilled runs and the in-memory tail.
      std::vector<RunReader> readers;
      readers.reserve(runs.size());
      for (const auto& r : runs) readers.emplace_back(r);
      const std::size_t mem_source = readers.size();
      std::size_t mem_pos = 0;
      std::vector<Keyed> heads(readers.size() + 1);
      auto cmp = [&](std::size_t a, std::size_t b) { return keyed_less(heads[b], heads[a]); };
      std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> heap(cmp);
      for (std::size_t i = 0; i < readers.size(); ++i) {
        if (readers[i].next(heads[i])) heap.push(i);
      }
      if (mem_pos < buffer.size()) {
        heads[mem_source] = buffer[mem_pos++];
        heap.push(mem_source);
      }
      while (!heap.empty()) {
        const std::size_t src = heap.top();
        heap.pop();
        emit(heads[src]);
        if (src == mem_source) {
          if (mem_pos < buffer.size()) {
            heads[src] = buffer[mem_pos++];
            heap.push(src);
          }
        } else if (readers[src].next(heads[src])) {
          heap.push(src);
        }
      }
    }
  } catch (...) {
    cleanup();
    throw;
  }
  cleanup();

  stats.unique_characters = chars.size();
  stats.unique_levels = levels.size();
  stats.unique_races = races.size();
  stats.unique_classes = classes.size();
  stats.unique_zones = zones.size();
  stats.unique_guilds = guilds.size();
  return stats;
}

IngestResult ingest_traces(std::span<const std::filesystem::path> paths,
                           const IngestOptions& options) {
  IngestResult result;
  result.stats = ingest_traces(
      paths, options, [&](const SnapshotRecord& r) { result.records.push_back(r); },
      &result.errors);
  return result;
}

std::vector<SnapshotRecord> window_filter(std::span<const SnapshotRecord> records,
                                          Instant start, Instant end) {
  if (start > end) throw std::invalid_argument("window start is after window end");
  std::vector<SnapshotRecord> out;
  for (const auto& r : records) {
    if (r.timestamp >= start && r.timestamp <= end) out.push_back(r);
  }
  return out;
}

void write_trace_file(const std::filesystem::path& path,
                      std::span<const SnapshotRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const Schema schema = default_schema();
  out << header_line(schema) << '\n';
  for (const auto& r : records) out << format_snapshot(r, schema) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace churn
