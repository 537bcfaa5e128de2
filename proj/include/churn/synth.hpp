#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "churn/civil_time.hpp"
#include "churn/csv.hpp"
#include "churn/profile.hpp"
#include "churn/trace.hpp"

namespace churn {

// Behaviour of one player population.
struct SynthGroup {
  std::string name = "all";
  double fraction = 1.0;
  double mean_lifetime_days = 180.0;  // exponential
  double activity_prob = 0.6;         // per day while subscribed
  double snapshots_per_day = 6.0;     // Poisson mean on active days, at least 1
  double guild_prob = 0.5;
  int start_level = 1;
  double level_up_prob = 0.1;  // per active day
  // Probability of one unsubscribed break of `break_days` inside the
  // subscription; the break is added to the span, not taken from it.
  double break_prob = 0.0;
  int break_days = 0;
};

struct SynthConfig {
  std::size_t players = 1000;
  Instant window_start = 1199145600;  // 2008-01-01 00:00:00
  int window_days = 366;
  int join_spread_days = 0;  // join day uniform on [0, join_spread_days]
  std::vector<SynthGroup> groups{SynthGroup{}};
  std::uint64_t seed = 1;
  std::int64_t first_char_id = 1;
  int zone_count = 40;
  int guild_count = 60;
  std::vector<std::string> races = default_races();
  std::vector<std::string> classes = default_classes();

  // Throws std::invalid_argument.
  void validate() const;
};

// Observation window covering exactly the generated days.
Window synth_window(const SynthConfig& config);

struct GroundTruth {
  std::int64_t char_id = 0;
  std::string group;
  int join_day = 0;
  double lifetime_days = 0.0;  // drawn value
  // First day without a subscription: join_day + max(1, ceil(lifetime)),
  // plus the break length for players who took one.
  int churn_day = 0;
  int break_start = -1;  // -1 without a break
  int break_days = 0;
  std::int32_t active_days = 0;  // inside the window
};

struct SynthOutput {
  std::vector<SnapshotRecord> records;  // (timestamp, char_id) order
  std::vector<GroundTruth> truth;       // char_id order
};

// Player i belongs to the first group whose cumulative fraction exceeds
// i / players, so group sizes are exact up to rounding. Each player draws
// from its own stream derive_seed(seed, i); `threads` never changes output.
SynthOutput generate_traces(const SynthConfig& config, unsigned threads = 1);

CsvTable truth_table(std::span<const GroundTruth> truth);

// Named configurations: "two_groups" (mean lifetimes 200 and 150 days) and
// "churn" (overlapping behavioural groups used for classifier checks).
SynthConfig synth_preset(std::string_view name);

}  // namespace churn
