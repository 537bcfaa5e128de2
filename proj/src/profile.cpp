#include "churn/profile.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "churn/error.hpp"

namespace churn {

namespace {

constexpr std::string_view kIntervalLabels[kLevelIntervalCount] = {
    "0-9", "10-19", "20-29", "30-39", "40-49", "50-59", "60-69", "70-79", "80"};

struct Accumulator {
  Instant first_seen = 0;
  Instant last_seen = 0;
  std::int64_t snapshots = 0;
  int max_level = 1;
  bool in_guild = false;
  std::unordered_set<std::string> zones;
  std::string race;
  std::string char_class;
  std::vector<std::int32_t> days;
};

PlayerProfile finish(std::int64_t char_id, Accumulator& acc, const Window& window,
                     DensityMode density) {
  PlayerProfile p;
  p.char_id = char_id;
  p.first_seen = acc.first_seen;
  p.last_seen = acc.last_seen;
  p.lifetime_days = static_cast<std::int32_t>(day_index(acc.last_seen) - day_index(acc.first_seen));
  p.active_days = static_cast<std::int32_t>(acc.days.size());
  p.snapshot_count = acc.snapshots;
  p.avg_daily_hours = static_cast<double>(acc.snapshots) * (10.0 / 60.0) / p.active_days;
  if (density == DensityMode::calendar) {
    p.playing_density = static_cast<double>(p.active_days) / (p.lifetime_days + 1);
  } else {
    p.playing_density =
        static_cast<double>(acc.snapshots) / (static_cast<double>(kSlotsPerDay) * p.active_days);
  }
  p.max_level = acc.max_level;
  p.level_interval = discretize_level(acc.max_level);
  p.in_guild = acc.in_guild;
  p.distinct_zones = static_cast<std::int32_t>(acc.zones.size());
  p.race = std::move(acc.race);
  p.char_class = std::move(acc.char_class);
  p.activity_days = std::move(acc.days);
  (void)window;
  return p;
}

std::vector<PlayerProfile> build_shard(std::span<const SnapshotRecord> records,
                                       const Window& window, DensityMode density,
                                       unsigned shard, unsigned shards) {
  std::unordered_map<std::int64_t, Accumulator> acc;
  const std::int64_t day0 = window.start_day();
  for (const auto& r : records) {
    if (!window.contains(r.timestamp)) continue;
    const auto bucket = static_cast<std::uint64_t>(r.char_id) % shards;
    if (bucket != shard) continue;
    auto [it, inserted] = acc.try_emplace(r.char_id);
    auto& a = it->second;
    if (inserted) a.first_seen = r.timestamp;
    a.first_seen = std::min(a.first_seen, r.timestamp);
    a.last_seen = std::max(a.last_seen, r.timestamp);
    ++a.snapshots;
    a.max_level = std::max(a.max_level, r.level);
    a.in_guild = a.in_guild || r.guild_id.has_value();
    if (!a.zones.contains(r.zone)) a.zones.insert(r.zone);
    // Chronologically last snapshot wins for the character-level attributes.
    a.race = r.race;
    a.char_class = r.char_class;
    const auto day = static_cast<std::int32_t>(day_index(r.timestamp) - day0);
    if (a.days.empty() || a.days.back() != day) a.days.push_back(day);
  }
  std::vector<PlayerProfile> out;
  out.reserve(acc.size());
  for (auto& [id, a] : acc) {
    // Input is time-sorted, but stay correct if it is not.
    if (!std::is_sorted(a.days.begin(), a.days.end()) ||
        std::adjacent_find(a.days.begin(), a.days.end()) != a.days.end()) {
      std::sort(a.days.begin(), a.days.end());
      a.days.erase(std::unique(a.days.begin(), a.days.end()), a.days.end());
    }
    out.push_back(finish(id, a, window, density));
  }
  return out;
}

}  // namespace

Window default_window() {
  return Window{*make_instant(2008, 1, 1, 0, 0, 0), *make_instant(2008, 12, 31, 23, 59, 59)};
}

std::string_view LevelInterval::label() const { return kIntervalLabels[bucket]; }

LevelInterval discretize_level(int level) {
  if (level < kMinLevel || level > kMaxLevel) {
    throw std::invalid_argument("level " + std::to_string(level) + " outside 1..80");
  }
  return LevelInterval{level == kMaxLevel ? 8 : level / 10};
}

std::vector<std::string> level_interval_labels() {
  return {std::begin(kIntervalLabels), std::end(kIntervalLabels)};
}

std::vector<PlayerProfile> build_profiles(std::span<const SnapshotRecord> records,
                                          const Window& window, DensityMode density,
                                          unsigned threads) {
  if (window.start > window.end) throw std::invalid_argument("empty profile window");
  const unsigned shards = std::max(1u, threads);
  std::vector<std::vector<PlayerProfile>> parts(shards);
  if (shards == 1) {
    parts[0] = build_shard(records, window, density, 0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned s = 0; s < shards; ++s) {
      pool.emplace_back([&, s] { parts[s] = build_shard(records, window, density, s, shards); });
    }
    for (auto& t : pool) t.join();
  }
  std::vector<PlayerProfile> out;
  for (auto& part : parts) {
    for (auto& p : part) out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const PlayerProfile& a, const PlayerProfile& b) { return a.char_id < b.char_id; });
  return out;
}

std::vector<PlayerProfile> filter_trial(std::span<const PlayerProfile> profiles, int min_days) {
  if (min_days < 0) throw std::invalid_argument("trial filter days must be >= 0");
  std::vector<PlayerProfile> out;
  for (const auto& p : profiles) {
    if (p.lifetime_days >= min_days) out.push_back(p);
  }
  return out;
}

SurvivalObservation label_churn(const PlayerProfile& profile,
                                std::span<const std::int32_t> activity_days, int gap_days,
                                const Window& window) {
  if (gap_days <= 0) throw std::invalid_argument("gap_days must be positive");
  if (activity_days.empty()) throw std::invalid_argument("player has no activity days");
  SurvivalObservation obs;
  obs.char_id = profile.char_id;
  const std::int32_t first = activity_days.front();
  for (std::size_t i = 0; i + 1 < activity_days.size(); ++i) {
    if (activity_days[i + 1] - activity_days[i] >= gap_days) {
      obs.event = true;
      obs.duration_days = activity_days[i] - first;
      return obs;
    }
  }
  const std::int32_t last = activity_days.back();
  obs.duration_days = last - first;
  obs.event = window.last_day() - last >= gap_days;
  return obs;
}

std::vector<SurvivalObservation> label_all(std::span<const PlayerProfile> profiles,
                                           int gap_days, const Window& window) {
  std::vector<SurvivalObservation> out;
  out.reserve(profiles.size());
  for (const auto& p : profiles) out.push_back(label_churn(p, gap_days, window));
  return out;
}

std::vector<std::string> default_feature_spec() {
  return {"avg_daily_hours", "playing_density", "in_guild",       "max_level",
          "active_days",     "lifetime_days",   "snapshot_count", "distinct_zones"};
}

FeatureMatrix assemble_dataset(std::span<const PlayerProfile> profiles,
                               std::span<const std::string> feature_spec, int gap_days,
                               const Window& window, const Vocabulary& vocab) {
  using Getter = double (*)(const PlayerProfile&);
  static const std::map<std::string, Getter, std::less<>> numeric = {
      {"avg_daily_hours", [](const PlayerProfile& p) { return p.avg_daily_hours; }},
      {"playing_density", [](const PlayerProfile& p) { return p.playing_density; }},
      {"in_guild", [](const PlayerProfile& p) { return p.in_guild ? 1.0 : 0.0; }},
      {"max_level", [](const PlayerProfile& p) { return static_cast<double>(p.max_level); }},
      {"active_days", [](const PlayerProfile& p) { return static_cast<double>(p.active_days); }},
      {"lifetime_days",
       [](const PlayerProfile& p) { return static_cast<double>(p.lifetime_days); }},
      {"snapshot_count",
       [](const PlayerProfile& p) { return static_cast<double>(p.snapshot_count); }},
      {"distinct_zones",
       [](const PlayerProfile& p) { return static_cast<double>(p.distinct_zones); }},
  };
  const auto levels = level_interval_labels();

  // Each column is a function of one profile.
  struct Column {
    std::string name;
    std::function<double(const PlayerProfile&)> get;
  };
  std::vector<Column> columns;
  for (const auto& feature : feature_spec) {
    if (auto it = numeric.find(feature); it != numeric.end()) {
      columns.push_back({feature, it->second});
    } else if (feature == "race") {
      for (const auto& r : vocab.races) {
        columns.push_back({"race=" + r, [r](const PlayerProfile& p) { return p.race == r ? 1.0 : 0.0; }});
      }
    } else if (feature == "char_class") {
      for (const auto& c : vocab.classes) {
        columns.push_back({"char_class=" + c, [c](const PlayerProfile& p) {
                             return p.char_class == c ? 1.0 : 0.0;
                           }});
      }
    } else if (feature == "level_interval") {
      for (int b = 0; b < kLevelIntervalCount; ++b) {
        columns.push_back({"level_interval=" + levels[b], [b](const PlayerProfile& p) {
                             return p.level_interval.bucket == b ? 1.0 : 0.0;
                           }});
      }
    } else {
      throw std::invalid_argument("unknown feature '" + feature + "'");
    }
  }

  std::vector<const PlayerProfile*> ordered;
  for (const auto& p : profiles) ordered.push_back(&p);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](auto* a, auto* b) { return a->char_id < b->char_id; });

  FeatureMatrix fm;
  fm.gap_days = gap_days;
  for (const auto& c : columns) fm.feature_names.push_back(c.name);
  fm.rows = Matrix(ordered.size(), columns.size());
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& p = *ordered[i];
    for (std::size_t j = 0; j < columns.size(); ++j) {
      const double v = columns[j].get(p);
      if (!std::isfinite(v)) {
        throw std::invalid_argument("non-finite feature " + columns[j].name + " for char " +
                                    std::to_string(p.char_id));
      }
      fm.rows(i, j) = v;
    }
    fm.labels.push_back(label_churn(p, gap_days, window).event ? 1 : 0);
    fm.char_ids.push_back(p.char_id);
  }
  return fm;
}

CsvTable profiles_table(std::span<const PlayerProfile> profiles) {
  CsvTable t;
  t.header = {"char_id",         "first_seen",     "last_seen",       "lifetime_days",
              "active_days",     "snapshot_count", "avg_daily_hours", "playing_density",
              "max_level",       "level_interval", "in_guild",        "distinct_zones",
              "race",            "char_class"};
  for (const auto& p : profiles) {
    t.rows.push_back({std::to_string(p.char_id), format_timestamp(p.first_seen),
                      format_timestamp(p.last_seen), std::to_string(p.lifetime_days),
                      std::to_string(p.active_days), std::to_string(p.snapshot_count),
                      format_double(p.avg_daily_hours), format_double(p.playing_density),
                      std::to_string(p.max_level), std::string(p.level_interval.label()),
                      p.in_guild ? "1" : "0", std::to_string(p.distinct_zones), p.race,
                      p.char_class});
  }
  return t;
}

CsvTable feature_matrix_table(const FeatureMatrix& fm) {
  CsvTable t;
  t.header.push_back("char_id");
  for (const auto& n : fm.feature_names) t.header.push_back(n);
  t.header.push_back(fm.label_name());
  for (std::size_t i = 0; i < fm.rows.rows(); ++i) {
    std::vector<std::string> row;
    row.push_back(i < fm.char_ids.size() ? std::to_string(fm.char_ids[i]) : std::to_string(i));
    for (const double v : fm.rows.row(i)) row.push_back(format_double(v));
    row.push_back(std::to_string(fm.labels[i]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

FeatureMatrix feature_matrix_from_table(const CsvTable& table) {
  if (table.header.size() < 2 || table.header.back().rfind("churn_", 0) != 0) {
    throw DataError("feature table needs a final churn_<gap> column");
  }
  auto number = [](const std::string& text, std::size_t line) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
      throw DataError("feature table row " + std::to_string(line) + ": bad number '" + text + "'");
    }
    return v;
  };
  FeatureMatrix fm;
  const bool has_id = table.header.front() == "char_id";
  const std::size_t first = has_id ? 1 : 0;
  const std::size_t last = table.header.size() - 1;
  fm.feature_names.assign(table.header.begin() + static_cast<std::ptrdiff_t>(first),
                          table.header.begin() + static_cast<std::ptrdiff_t>(last));
  const double gap = number(table.header.back().substr(6), 1);
  if (gap != std::floor(gap) || gap <= 0) throw DataError("bad label column " + table.header.back());
  fm.gap_days = static_cast<int>(gap);
  fm.rows = Matrix(table.rows.size(), fm.feature_names.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = i + 2;
    if (row.size() != table.header.size()) throw DataError("feature table row " + std::to_string(line) + " is ragged");
    fm.char_ids.push_back(has_id ? static_cast<std::int64_t>(number(row[0], line)) : static_cast<std::int64_t>(i));
    for (std::size_t j = first; j < last; ++j) fm.rows(i, j - first) = number(row[j], line);
    const double label = number(row[last], line);
    if (label != 0.0 && label != 1.0) throw DataError("feature table row " + std::to_string(line) + ": label must be 0 or 1");
    fm.labels.push_back(static_cast<int>(label));
  }
  return fm;
}

}  // namespace churn
