#include <map>
#include <set>

#include "churn/synth.hpp"
#include "doctest.h"

using namespace churn;

TEST_CASE("an always-active long-lived player fills the window") {
  SynthConfig cfg;
  cfg.players = 1;
  cfg.window_days = 10;
  cfg.groups = {SynthGroup{"all", 1.0, 1e12, 1.0, 6.0, 0.5, 1, 0.1}};
  const auto out = generate_traces(cfg);
  std::set<std::int64_t> days;
  for (const auto& r : out.records) days.insert(day_index(r.timestamp));
  CHECK(days.size() == 10);
  CHECK(out.truth[0].active_days == 10);
}

TEST_CASE("two-group mean lifetimes follow the configuration") {
  auto cfg = synth_preset("two_groups");
  cfg.players = 5000;
  cfg.window_days = 30;  // keep it quick; lifetimes come from the truth table
  const auto out = generate_traces(cfg);
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& t : out.truth) {
    acc[t.group].first += t.lifetime_days;
    acc[t.group].second += 1;
  }
  CHECK(acc["long"].second == 2500);
  CHECK(acc["short"].second == 2500);
  CHECK(acc["long"].first / acc["long"].second == doctest::Approx(200.0).epsilon(0.05));
  CHECK(acc["short"].first / acc["short"].second == doctest::Approx(150.0).epsilon(0.05));
}

TEST_CASE("determinism contract") {
  SynthConfig cfg;
  cfg.players = 50;
  cfg.window_days = 60;
  cfg.join_spread_days = 20;
  cfg.groups = {SynthGroup{"a", 0.4, 30.0, 0.5, 4.0, 0.5, 1, 0.2, 0.5, 10}, SynthGroup{"b", 0.6, 90.0, 0.8, 8.0, 0.5, 70, 0.3}};
  const auto a = generate_traces(cfg, 1);
  const auto b = generate_traces(cfg, 4);
  CHECK(a.records == b.records);
  CHECK(truth_table(a.truth).rows == truth_table(b.truth).rows);
  cfg.seed = 2;
  CHECK(generate_traces(cfg).records != a.records);
}

TEST_CASE("property: records respect ground truth and record invariants") {
  auto cfg = synth_preset("churn");
  cfg.players = 300;
  const auto out = generate_traces(cfg);
  std::map<std::int64_t, const GroundTruth*> truth;
  for (const auto& t : out.truth) truth[t.char_id] = &t;
  std::map<std::int64_t, int> last_level;
  std::map<std::int64_t, std::set<std::int64_t>> days;
  const auto window = synth_window(cfg);
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    const auto& r = out.records[i];
    if (i > 0) CHECK_FALSE(trace_order(r, out.records[i - 1]));
    CHECK(r.level >= kMinLevel);
    CHECK(r.level <= kMaxLevel);
    CHECK(r.timestamp % kSlotSeconds == 0);
    CHECK(window.contains(r.timestamp));
    const auto& t = *truth.at(r.char_id);
    const auto day = static_cast<int>((r.timestamp - cfg.window_start) / kSecondsPerDay);
    CHECK(day >= t.join_day);
    CHECK(day < t.churn_day);
    if (t.break_start >= 0) CHECK_FALSE((day >= t.break_start && day < t.break_start + t.break_days));
    auto it = last_level.find(r.char_id);
    if (it != last_level.end()) CHECK(r.level >= it->second);
    last_level[r.char_id] = r.level;
    days[r.char_id].insert(day);
  }
  for (const auto& t : out.truth) CHECK(static_cast<std::size_t>(t.active_days) == days[t.char_id].size());
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.players = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.groups = {SynthGroup{"a", 0.5}, SynthGroup{"b", 0.4}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.groups[0].mean_lifetime_days = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.groups[0].activity_prob = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.groups[0].start_level = 81;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.join_spread_days = cfg.window_days;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.window_start += 1;
  CHECK_THROWS_AS(generate_traces(bad), std::invalid_argument);
}

TEST_CASE("presets") {
  CHECK(synth_preset("two_groups").groups.size() == 2);
  CHECK(synth_preset("churn").groups.size() == 5);
  CHECK_NOTHROW(synth_preset("churn").validate());
  CHECK_NOTHROW(synth_preset("default").validate());
  CHECK_THROWS_AS(synth_preset("nope"), std::invalid_argument);
  const auto w = synth_window(synth_preset("two_groups"));
  CHECK(w.length_days() == 365);
}

TEST_CASE("truth table columns") {
  SynthConfig cfg;
  cfg.players = 3;
  const auto t = truth_table(generate_traces(cfg).truth);
  CHECK(t.header.size() == 8);
  CHECK(t.rows.size() == 3);
  CHECK(t.rows[0][0] == "1");
}
