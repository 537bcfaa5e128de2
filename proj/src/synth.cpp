#include "churn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "churn/rng.hpp"

namespace churn {

namespace {

constexpr double kMaxSpanDays = 1e7;

struct PlayerOutput {
  std::vector<SnapshotRecord> records;
  GroundTruth truth;
};

std::string zone_name(int z) {
  std::string n = std::to_string(z);
  return "Zone " + std::string(n.size() < 2 ? 1 : 0, '0') + n;
}

PlayerOutput generate_player(const SynthConfig& cfg, const SynthGroup& group, std::size_t index) {
  Rng rng(derive_seed(cfg.seed, index));
  PlayerOutput out;
  auto& t = out.truth;
  t.char_id = cfg.first_char_id + static_cast<std::int64_t>(index);
  t.group = group.name;
  t.join_day = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.join_spread_days) + 1));
  t.lifetime_days = rng.exponential(1.0 / group.mean_lifetime_days);
  // Clamped so absurd means cannot overflow the day arithmetic.
  const int span = static_cast<int>(std::clamp(std::ceil(t.lifetime_days), 1.0, kMaxSpanDays));
  t.churn_day = t.join_day + span;
  // Drawn unconditionally so adding a break never shifts later draws.
  const bool takes_break = rng.bernoulli(group.break_prob);
  const auto break_offset = static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
  if (takes_break && group.break_days > 0 && span > 1) {
    t.break_start = t.join_day + 1 + break_offset % (span - 1);
    t.break_days = group.break_days;
    t.churn_day += group.break_days;
  }

  const std::string& race = cfg.races[rng.below(cfg.races.size())];
  const std::string& cls = cfg.classes[rng.below(cfg.classes.size())];
  std::optional<std::int64_t> guild;
  if (rng.bernoulli(group.guild_prob)) {
    guild = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(cfg.guild_count)));
  }
  int level = group.start_level;

  const int last_day = std::min(t.churn_day, cfg.window_days) - 1;
  for (int day = t.join_day; day <= last_day; ++day) {
    if (t.break_start >= 0 && day >= t.break_start && day < t.break_start + t.break_days) continue;
    // Draw even on forced days so the stream does not depend on the window.
    const bool drawn = rng.bernoulli(group.activity_prob);
    const bool resumed = t.break_start >= 0 && day == t.break_start + t.break_days;
    const bool active = drawn || day == t.join_day || day == last_day || day == t.break_start - 1 || resumed;
    if (!active) continue;
    ++t.active_days;
    if (level < kMaxLevel && rng.bernoulli(group.level_up_prob)) ++level;
    const auto n = std::clamp<std::uint32_t>(rng.poisson(group.snapshots_per_day), 1, kSlotsPerDay);
    const auto first_slot = rng.below(static_cast<std::uint64_t>(kSlotsPerDay - n) + 1);
    const Instant day_start = cfg.window_start + static_cast<Instant>(day) * kSecondsPerDay;
    for (std::uint32_t s = 0; s < n; ++s) {
      SnapshotRecord r;
      r.char_id = t.char_id;
      r.level = level;
      r.race = race;
      r.char_class = cls;
      r.zone = zone_name(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.zone_count))));
      r.guild_id = guild;
      r.timestamp = day_start + static_cast<Instant>(first_slot + s) * kSlotSeconds;
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace

void SynthConfig::validate() const {
  if (players == 0) throw std::invalid_argument("synth: players must be positive");
  if (window_days < 1) throw std::invalid_argument("synth: window_days must be positive");
  if (join_spread_days < 0 || join_spread_days >= window_days) {
    throw std::invalid_argument("synth: join_spread_days must be in [0, window_days)");
  }
  if (window_start % kSecondsPerDay != 0) {
    throw std::invalid_argument("synth: window_start must be midnight");
  }
  if (groups.empty()) throw std::invalid_argument("synth: at least one group is required");
  if (zone_count < 1 || guild_count < 1) throw std::invalid_argument("synth: zone/guild counts must be positive");
  if (races.empty() || classes.empty()) throw std::invalid_argument("synth: empty race or class list");
  double total = 0.0;
  for (const auto& g : groups) {
    const auto where = "synth group '" + g.name + "': ";
    if (!(g.fraction > 0.0)) throw std::invalid_argument(where + "fraction must be > 0");
    if (!(g.mean_lifetime_days > 0.0)) throw std::invalid_argument(where + "mean_lifetime_days must be > 0");
    if (!(g.activity_prob > 0.0 && g.activity_prob <= 1.0)) {
      throw std::invalid_argument(where + "activity_prob must be in (0, 1]");
    }
    if (!(g.snapshots_per_day > 0.0)) throw std::invalid_argument(where + "snapshots_per_day must be > 0");
    if (!(g.guild_prob >= 0.0 && g.guild_prob <= 1.0)) {
      throw std::invalid_argument(where + "guild_prob must be in [0, 1]");
    }
    if (g.start_level < kMinLevel || g.start_level > kMaxLevel) {
      throw std::invalid_argument(where + "start_level must be in 1..80");
    }
    if (!(g.level_up_prob >= 0.0 && g.level_up_prob <= 1.0)) {
      throw std::invalid_argument(where + "level_up_prob must be in [0, 1]");
    }
    if (!(g.break_prob >= 0.0 && g.break_prob <= 1.0)) {
      throw std::invalid_argument(where + "break_prob must be in [0, 1]");
    }
    if (g.break_days < 0) throw std::invalid_argument(where + "break_days must be >= 0");
    total += g.fraction;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw std::invalid_argument("synth: group fractions must sum to 1");
}

Window synth_window(const SynthConfig& config) {
  return Window{config.window_start,
                config.window_start + static_cast<Instant>(config.window_days) * kSecondsPerDay - 1};
}

SynthOutput generate_traces(const SynthConfig& config, unsigned threads) {
  config.validate();
  const std::size_t n = config.players;
  std::vector<std::size_t> group_of(n);
  {
    std::size_t g = 0;
    double cum = config.groups[0].fraction;
    for (std::size_t i = 0; i < n; ++i) {
      while (g + 1 < config.groups.size() &&
             static_cast<double>(i) >= std::round(cum * static_cast<double>(n))) {
        cum += config.groups[++g].fraction;
      }
      group_of[i] = g;
    }
  }

  std::vector<PlayerOutput> players(n);
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  auto run = [&](unsigned w) {
    for (std::size_t i = w; i < n; i += workers) {
      players[i] = generate_player(config, config.groups[group_of[i]], i);
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }

  SynthOutput out;
  std::size_t total = 0;
  for (const auto& p : players) total += p.records.size();
  out.records.reserve(total);
  out.truth.reserve(n);
  for (auto& p : players) {
    std::move(p.records.begin(), p.records.end(), std::back_inserter(out.records));
    out.truth.push_back(std::move(p.truth));
  }
  std::sort(out.records.begin(), out.records.end(), trace_order);
  return out;
}

CsvTable truth_table(std::span<const GroundTruth> truth) {
  CsvTable t;
  t.header = {"char_id", "group", "join_day", "lifetime_days", "churn_day", "break_start", "break_days", "active_days"};
  for (const auto& g : truth) {
    t.rows.push_back({std::to_string(g.char_id), g.group, std::to_string(g.join_day),
                      format_double(g.lifetime_days), std::to_string(g.churn_day),
                      std::to_string(g.break_start), std::to_string(g.break_days),
                      std::to_string(g.active_days)});
  }
  return t;
}

SynthConfig synth_preset(std::string_view name) {
  SynthConfig c;
  if (name == "two_groups") {
    c.players = 10000;
    c.window_days = 365;
    c.groups = {
        SynthGroup{"long", 0.5, 200.0, 0.7, 6.0, 0.6, 1, 0.1},
        SynthGroup{"short", 0.5, 150.0, 0.7, 6.0, 0.4, 1, 0.1},
    };
    return c;
  }
  if (name == "churn") {
    // Overlapping populations; returners take a season off and come back,
    // which makes churn depend on feature interactions.
    c.players = 4000;
    c.window_days = 366;
    c.join_spread_days = 120;
    c.groups = {
        SynthGroup{"casual", 0.30, 90.0, 0.35, 3.0, 0.3, 1, 0.08, 0.3, 190},
        SynthGroup{"regular", 0.30, 400.0, 0.6, 5.0, 0.7, 10, 0.12, 0.2, 190},
        SynthGroup{"hardcore", 0.15, 900.0, 0.9, 10.0, 0.9, 40, 0.2},
        SynthGroup{"burnout", 0.10, 60.0, 0.95, 14.0, 0.5, 20, 0.3},
        SynthGroup{"returner", 0.15, 250.0, 0.8, 6.0, 0.5, 30, 0.1, 1.0, 190},
    };
    return c;
  }
  if (name == "default") return c;
  throw std::invalid_argument("unknown synth preset '" + std::string(name) + "'");
}

}  // namespace churn
