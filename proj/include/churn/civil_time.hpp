#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace churn {

// Seconds since 1970-01-01 00:00:00. All instants live in one zone; no
// conversion is ever applied.
using Instant = std::int64_t;

inline constexpr Instant kSecondsPerDay = 86400;
inline constexpr Instant kSlotSeconds = 600;  // one 10-minute query slot
inline constexpr int kSlotsPerDay = 144;

enum class TimestampFormat {
  iso,       // 2008-12-03 12:20:00
  us_short,  // 12/03/08 12:20:00 (two-digit year, 20xx)
};

struct CivilTime {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;
  unsigned weekday = 4;  // 0 = Sunday
};

// Floor division; instants before the epoch map to negative days.
constexpr std::int64_t day_index(Instant t) {
  return t >= 0 ? t / kSecondsPerDay : -((-t + kSecondsPerDay - 1) / kSecondsPerDay);
}

constexpr Instant snap_to_slot(Instant t) {
  const Instant r = t % kSlotSeconds;
  return r >= 0 ? t - r : t - r - kSlotSeconds;
}

std::optional<Instant> make_instant(int year, unsigned month, unsigned day, int hour = 0,
                                    int minute = 0, int second = 0);

CivilTime to_civil(Instant t);

// Strict parse: exact field widths, range-checked calendar date. Returns
// nullopt on any malformation. No snapping is applied here.
std::optional<Instant> parse_timestamp(std::string_view text,
                                       TimestampFormat format = TimestampFormat::iso);

// "YYYY-MM-DD HH:MM:SS"
std::string format_timestamp(Instant t);

// "YYYY-MM-DD"
std::string format_date(Instant t);

}  // namespace churn
