#include "churn/civil_time.hpp"

#include <chrono>
#include <cstdio>

namespace churn {

namespace {

bool read_digits(std::string_view text, std::size_t pos, std::size_t width, int& out) {
  if (pos + width > text.size()) return false;
  int value = 0;
  for (std::size_t i = 0; i < width; ++i) {
    const char c = text[pos + i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  return true;
}

}  // namespace

std::optional<Instant> make_instant(int year, unsigned month, unsigned day, int hour,
                                    int minute, int second) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                           std::chrono::day{day}};
  if (!ymd.ok()) return std::nullopt;
  if (hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0 || second > 59) {
    return std::nullopt;
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Instant>(days) * kSecondsPerDay + hour * 3600 + minute * 60 + second;
}

CivilTime to_civil(Instant t) {
  using namespace std::chrono;
  const std::int64_t d = day_index(t);
  const sys_days sd{days{d}};
  const year_month_day ymd{sd};
  const Instant secs = t - d * kSecondsPerDay;
  CivilTime out;
  out.year = static_cast<int>(ymd.year());
  out.month = static_cast<unsigned>(ymd.month());
  out.day = static_cast<unsigned>(ymd.day());
  out.hour = static_cast<int>(secs / 3600);
  out.minute = static_cast<int>((secs % 3600) / 60);
  out.second = static_cast<int>(secs % 60);
  out.weekday = weekday{sd}.c_encoding();
  return out;
}

std::optional<Instant> parse_timestamp(std::string_view text, TimestampFormat format) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (format == TimestampFormat::iso) {
    if (text.size() != 19 || text[4] != '-' || text[7] != '-' || text[10] != ' ' ||
        text[13] != ':' || text[16] != ':') {
      return std::nullopt;
    }
    if (!read_digits(text, 0, 4, y) || !read_digits(text, 5, 2, mo) ||
        !read_digits(text, 8, 2, d) || !read_digits(text, 11, 2, h) ||
        !read_digits(text, 14, 2, mi) || !read_digits(text, 17, 2, s)) {
      return std::nullopt;
    }
  } else {
    if (text.size() != 17 || text[2] != '/' || text[5] != '/' || text[8] != ' ' ||
        text[11] != ':' || text[14] != ':') {
      return std::nullopt;
    }
    if (!read_digits(text, 0, 2, mo) || !read_digits(text, 3, 2, d) ||
        !read_digits(text, 6, 2, y) || !read_digits(text, 9, 2, h) ||
        !read_digits(text, 12, 2, mi) || !read_digits(text, 15, 2, s)) {
      return std::nullopt;
    }
    y += 2000;
  }
  if (mo < 1 || d < 1) return std::nullopt;
  return make_instant(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), h, mi, s);
}

std::string format_timestamp(Instant t) {
  const CivilTime c = to_civil(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", c.year, c.month, c.day,
                c.hour, c.minute, c.second);
  return buf;
}

std::string format_date(Instant t) {
  const CivilTime c = to_civil(t);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.year, c.month, c.day);
  return buf;
}

}  // namespace churn
