#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "churn/csv.hpp"
#include "churn/profile.hpp"
#include "churn/survival.hpp"
#include "churn/trace.hpp"

namespace churn {

// Character-level keys (level, level_interval, race, class, race_class,
// guild, guild_class) count each character once, using its chronologically
// last snapshot. zone counts snapshots. guild lists unguilded characters
// under "(none)"; guild_class counts the classes of guilded characters only.
enum class FrequencyKey { level, level_interval, race, char_class, race_class, zone, guild, guild_class };

FrequencyKey parse_frequency_key(std::string_view name);
std::string frequency_key_name(FrequencyKey key);

struct FrequencyTable {
  std::string key;
  // Descending count; equal counts ordered by value (numerically when both
  // values are integers).
  std::vector<std::pair<std::string, std::size_t>> rows;

  std::size_t total() const;
};

FrequencyTable frequency_table(std::span<const SnapshotRecord> records, FrequencyKey key);
CsvTable to_table(const FrequencyTable& table);

enum class Granularity { hour, day, month, weekday };
Granularity parse_granularity(std::string_view name);
std::string granularity_name(Granularity g);

// Attribute of the snapshot itself, so a character can appear in two groups
// of one bucket if it changed (e.g. levelled) inside it.
enum class GroupKey { none, level_interval, race, char_class, guild };
GroupKey parse_group_key(std::string_view name);

struct ActivityRow {
  std::string bucket;  // "07", "2008-03-01", "2008-03", "Mon"
  std::string group;   // empty without a group key
  std::size_t active_characters = 0;
};

// Distinct characters per bucket (and group). Rows are ordered by bucket in
// natural time order, then group.
struct ActivitySeries {
  Granularity granularity = Granularity::day;
  std::vector<ActivityRow> rows;
};

ActivitySeries activity_series(std::span<const SnapshotRecord> records, Granularity granularity,
                               GroupKey group = GroupKey::none);
CsvTable to_table(const ActivitySeries& series);

struct PercentileReport {
  std::vector<std::pair<double, double>> rows;  // (percentile, hours)
  double mean = 0.0;
};

// Nearest rank: the value at rank ceil(p/100 * N), clamped to rank 1.
PercentileReport playtime_percentiles(std::span<const PlayerProfile> profiles,
                                      std::span<const double> percentiles);
double nearest_rank(std::vector<double> values, double percentile);
CsvTable to_table(const PercentileReport& report);

void emit_csv(const CsvTable& table, const std::filesystem::path& path);

enum class ChartKind { bar, step, line, scatter };

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  // Step charts: extend the last level to this x.
  std::optional<double> x_end;
  // Scatter: optional integer class per point, used for colour.
  std::vector<int> groups;
};

struct ChartSpec {
  ChartKind kind = ChartKind::line;
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<std::string> categories;  // bar labels, one per x
  int width = 720;
  int height = 440;
  int margin = 60;
};

// Self-contained SVG with axes and a legend. Deterministic bytes for equal
// input. Step charts draw each level as <line class="step-h"> and each drop
// as <line class="step-v">.
std::string render_svg(const ChartSpec& spec);
void emit_svg(const ChartSpec& spec, const std::filesystem::path& path);

// Step series for a survival curve, starting at (0, 1) and extended to the
// largest follow-up.
Series survival_series(const SurvivalCurve& curve, std::string name);

}  // namespace churn
