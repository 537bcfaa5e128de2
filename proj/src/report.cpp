#include "churn/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace churn {

namespace {

std::optional<long long> as_integer(const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

bool value_less(const std::string& a, const std::string& b) {
  const auto ia = as_integer(a), ib = as_integer(b);
  if (ia && ib) return *ia < *ib;
  if (ia != ib && (ia || ib)) return ia.has_value();  // numbers before text
  return a < b;
}

// Last snapshot per character; equal timestamps keep the earlier record.
std::vector<const SnapshotRecord*> latest_snapshots(std::span<const SnapshotRecord> records) {
  std::unordered_map<std::int64_t, const SnapshotRecord*> last;
  for (const auto& r : records) {
    auto [it, inserted] = last.try_emplace(r.char_id, &r);
    if (!inserted && r.timestamp > it->second->timestamp) it->second = &r;
  }
  std::vector<const SnapshotRecord*> out;
  out.reserve(last.size());
  for (const auto& [id, r] : last) out.push_back(r);
  std::sort(out.begin(), out.end(),
            [](const SnapshotRecord* a, const SnapshotRecord* b) { return a->char_id < b->char_id; });
  return out;
}

std::string two_digits(int v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

const char* const kWeekdays[] = {"Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};

std::string group_value(const SnapshotRecord& r, GroupKey key) {
  switch (key) {
    case GroupKey::none: return "";
    case GroupKey::level_interval: return std::string(discretize_level(r.level).label());
    case GroupKey::race: return r.race;
    case GroupKey::char_class: return r.char_class;
    case GroupKey::guild: return r.guild_id ? std::to_string(*r.guild_id) : "(none)";
  }
  return "";
}

}  // namespace

FrequencyKey parse_frequency_key(std::string_view name) {
  if (name == "level") return FrequencyKey::level;
  if (name == "level_interval") return FrequencyKey::level_interval;
  if (name == "race") return FrequencyKey::race;
  if (name == "class" || name == "char_class") return FrequencyKey::char_class;
  if (name == "race_class") return FrequencyKey::race_class;
  if (name == "zone") return FrequencyKey::zone;
  if (name == "guild") return FrequencyKey::guild;
  if (name == "guild_class") return FrequencyKey::guild_class;
  throw std::invalid_argument("unknown frequency key '" + std::string(name) + "'");
}

std::string frequency_key_name(FrequencyKey key) {
  switch (key) {
    case FrequencyKey::level: return "level";
    case FrequencyKey::level_interval: return "level_interval";
    case FrequencyKey::race: return "race";
    case FrequencyKey::char_class: return "class";
    case FrequencyKey::race_class: return "race_class";
    case FrequencyKey::zone: return "zone";
    case FrequencyKey::guild: return "guild";
    case FrequencyKey::guild_class: return "guild_class";
  }
  return "?";
}

std::size_t FrequencyTable::total() const {
  std::size_t t = 0;
  for (const auto& [v, c] : rows) t += c;
  return t;
}

FrequencyTable frequency_table(std::span<const SnapshotRecord> records, FrequencyKey key) {
  std::map<std::string, std::size_t> counts;
  if (key == FrequencyKey::zone) {
    for (const auto& r : records) ++counts[r.zone];
  } else {
    for (const auto* r : latest_snapshots(records)) {
      switch (key) {
        case FrequencyKey::level: ++counts[std::to_string(r->level)]; break;
        case FrequencyKey::level_interval:
          ++counts[std::string(discretize_level(r->level).label())];
          break;
        case FrequencyKey::race: ++counts[r->race]; break;
        case FrequencyKey::char_class: ++counts[r->char_class]; break;
        case FrequencyKey::race_class: ++counts[r->race + " " + r->char_class]; break;
        case FrequencyKey::guild:
          ++counts[r->guild_id ? std::to_string(*r->guild_id) : "(none)"];
          break;
        case FrequencyKey::guild_class:
          if (r->guild_id) ++counts[r->char_class];
          break;
        case FrequencyKey::zone: break;
      }
    }
  }
  FrequencyTable t;
  t.key = frequency_key_name(key);
  t.rows.assign(counts.begin(), counts.end());
  std::sort(t.rows.begin(), t.rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return value_less(a.first, b.first);
  });
  return t;
}

CsvTable to_table(const FrequencyTable& table) {
  CsvTable t;
  t.header = {table.key, "count"};
  for (const auto& [v, c] : table.rows) t.rows.push_back({v, std::to_string(c)});
  return t;
}

Granularity parse_granularity(std::string_view name) {
  if (name == "hour") return Granularity::hour;
  if (name == "day") return Granularity::day;
  if (name == "month") return Granularity::month;
  if (name == "weekday") return Granularity::weekday;
  throw std::invalid_argument("unknown granularity '" + std::string(name) + "'");
}

std::string granularity_name(Granularity g) {
  switch (g) {
    case Granularity::hour: return "hour";
    case Granularity::day: return "day";
    case Granularity::month: return "month";
    case Granularity::weekday: return "weekday";
  }
  return "?";
}

GroupKey parse_group_key(std::string_view name) {
  if (name.empty() || name == "none") return GroupKey::none;
  if (name == "level_interval") return GroupKey::level_interval;
  if (name == "race") return GroupKey::race;
  if (name == "class" || name == "char_class") return GroupKey::char_class;
  if (name == "guild") return GroupKey::guild;
  throw std::invalid_argument("unknown group key '" + std::string(name) + "'");
}

ActivitySeries activity_series(std::span<const SnapshotRecord> records, Granularity granularity,
                               GroupKey group) {
  // Bucket ordinal keeps natural time order; the label is derived once.
  std::map<std::pair<std::int64_t, std::string>, std::set<std::int64_t>> buckets;
  std::map<std::int64_t, std::string> labels;
  for (const auto& r : records) {
    const auto ct = to_civil(r.timestamp);
    std::int64_t ordinal = 0;
    switch (granularity) {
      case Granularity::hour: ordinal = ct.hour; break;
      case Granularity::day: ordinal = day_index(r.timestamp); break;
      case Granularity::month: ordinal = static_cast<std::int64_t>(ct.year) * 12 + ct.month - 1; break;
      case Granularity::weekday: ordinal = ct.weekday; break;
    }
    if (!labels.count(ordinal)) {
      switch (granularity) {
        case Granularity::hour: labels[ordinal] = two_digits(ct.hour); break;
        case Granularity::day: labels[ordinal] = format_date(r.timestamp); break;
        case Granularity::month:
          labels[ordinal] = std::to_string(ct.year) + "-" + two_digits(static_cast<int>(ct.month));
          break;
        case Granularity::weekday: labels[ordinal] = kWeekdays[ct.weekday]; break;
      }
    }
    buckets[{ordinal, group_value(r, group)}].insert(r.char_id);
  }
  ActivitySeries s;
  s.granularity = granularity;
  for (const auto& [key, ids] : buckets) {
    s.rows.push_back({labels[key.first], key.second, ids.size()});
  }
  return s;
}

CsvTable to_table(const ActivitySeries& series) {
  CsvTable t;
  t.header = {granularity_name(series.granularity), "group", "active_characters"};
  for (const auto& r : series.rows) t.rows.push_back({r.bucket, r.group, std::to_string(r.active_characters)});
  return t;
}

double nearest_rank(std::vector<double> values, double percentile) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(percentile >= 0.0 && percentile <= 100.0)) {
    throw std::invalid_argument("percentile must be in [0, 100]");
  }
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  // Small slack so that e.g. 95% of 20 lands on rank 19, not 20.
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

PercentileReport playtime_percentiles(std::span<const PlayerProfile> profiles,
                                      std::span<const double> percentiles) {
  if (profiles.empty()) throw std::invalid_argument("no profiles for playtime percentiles");
  std::vector<double> hours;
  hours.reserve(profiles.size());
  for (const auto& p : profiles) hours.push_back(p.avg_daily_hours);
  PercentileReport r;
  r.mean = std::accumulate(hours.begin(), hours.end(), 0.0) / static_cast<double>(hours.size());
  for (const double p : percentiles) r.rows.emplace_back(p, nearest_rank(hours, p));
  return r;
}

CsvTable to_table(const PercentileReport& report) {
  CsvTable t;
  t.header = {"percentile", "avg_daily_hours"};
  for (const auto& [p, h] : report.rows) t.rows.push_back({format_double(p), format_double(h)});
  t.rows.push_back({"mean", format_double(report.mean)});
  return t;
}

void emit_csv(const CsvTable& table, const std::filesystem::path& path) {
  write_csv_file(path, table);
}

}  // namespace churn
