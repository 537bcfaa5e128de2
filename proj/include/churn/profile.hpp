#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "churn/civil_time.hpp"
#include "churn/csv.hpp"
#include "churn/matrix.hpp"
#include "churn/trace.hpp"

namespace churn {

// Closed observation window [start, end]. Day arithmetic uses calendar days:
// day 0 is the day containing `start`.
struct Window {
  Instant start = 0;
  Instant end = 0;

  std::int64_t start_day() const { return day_index(start); }
  std::int64_t end_day() const { return day_index(end); }
  // Index of the last window day relative to day 0.
  std::int32_t last_day() const { return static_cast<std::int32_t>(end_day() - start_day()); }
  std::int32_t length_days() const { return last_day() + 1; }
  bool contains(Instant t) const { return t >= start && t <= end; }
};

// 2008-01-01 00:00:00 .. 2008-12-31 23:59:59
Window default_window();

// Level decade bucket; level 80 has its own bucket.
struct LevelInterval {
  int bucket = 0;  // 0 = "0-9", ..., 7 = "70-79", 8 = "80"

  std::string_view label() const;
  friend bool operator==(LevelInterval, LevelInterval) = default;
};

inline constexpr int kLevelIntervalCount = 9;

// Throws std::invalid_argument outside 1..80.
LevelInterval discretize_level(int level);
std::vector<std::string> level_interval_labels();

enum class DensityMode {
  calendar,  // active_days / (lifetime_days + 1)
  per_slot,  // snapshots / (144 * active_days)
};

struct PlayerProfile {
  std::int64_t char_id = 0;
  Instant first_seen = 0;
  Instant last_seen = 0;
  std::int32_t lifetime_days = 0;  // calendar days from first to last sighting
  std::int32_t active_days = 0;
  std::int64_t snapshot_count = 0;
  double avg_daily_hours = 0.0;
  double playing_density = 0.0;
  int max_level = 1;
  LevelInterval level_interval;
  bool in_guild = false;
  std::int32_t distinct_zones = 0;
  std::string race;
  std::string char_class;
  // Sorted distinct activity days relative to the window's day 0.
  std::vector<std::int32_t> activity_days;
};

// One profile per character seen inside the window, ascending char_id.
// Records outside the window are ignored. `threads` > 1 shards by char_id;
// the result does not depend on it.
std::vector<PlayerProfile> build_profiles(std::span<const SnapshotRecord> records,
                                          const Window& window,
                                          DensityMode density = DensityMode::calendar,
                                          unsigned threads = 1);

// Keeps profiles with lifetime_days >= min_days.
std::vector<PlayerProfile> filter_trial(std::span<const PlayerProfile> profiles,
                                        int min_days = 30);

struct SurvivalObservation {
  std::int64_t char_id = 0;
  std::int32_t duration_days = 0;
  bool event = false;  // true = churned, false = censored

  friend bool operator==(const SurvivalObservation&, const SurvivalObservation&) = default;
};

// Fixed 30-day months: 2 -> 60, 3 -> 90, 4 -> 120, 6 -> 180.
constexpr int months_to_gap_days(int months) { return 30 * months; }

// Churn is the first inactivity gap of at least gap_days, counting the
// terminal gap from the last active day to the window's last day. Durations
// count from the first active day.
SurvivalObservation label_churn(const PlayerProfile& profile,
                                std::span<const std::int32_t> activity_days, int gap_days,
                                const Window& window);

inline SurvivalObservation label_churn(const PlayerProfile& profile, int gap_days,
                                       const Window& window) {
  return label_churn(profile, profile.activity_days, gap_days, window);
}

std::vector<SurvivalObservation> label_all(std::span<const PlayerProfile> profiles,
                                           int gap_days, const Window& window);

struct Vocabulary {
  std::vector<std::string> races = default_races();
  std::vector<std::string> classes = default_classes();
};

struct FeatureMatrix {
  std::vector<std::string> feature_names;
  Matrix rows;
  std::vector<int> labels;  // 1 = churned within the gap
  std::vector<std::int64_t> char_ids;
  int gap_days = 0;

  std::string label_name() const { return "churn_" + std::to_string(gap_days); }
};

std::vector<std::string> default_feature_spec();

// Numeric features: avg_daily_hours, playing_density, in_guild, max_level,
// active_days, lifetime_days, snapshot_count, distinct_zones.
// Categorical (one-hot, vocabulary order): race, char_class, level_interval.
// Throws std::invalid_argument on an unknown feature name.
FeatureMatrix assemble_dataset(std::span<const PlayerProfile> profiles,
                               std::span<const std::string> feature_spec, int gap_days,
                               const Window& window, const Vocabulary& vocab = {});

CsvTable profiles_table(std::span<const PlayerProfile> profiles);

// Header: char_id, features..., churn_<gap>.
CsvTable feature_matrix_table(const FeatureMatrix& fm);
FeatureMatrix feature_matrix_from_table(const CsvTable& table);

}  // namespace churn
