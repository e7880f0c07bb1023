#pragma once

#include <cstdint>
#include <cstdio>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace hivemon {

inline constexpr std::int64_t kSecPerMin = 60;
inline constexpr std::int64_t kSecPerHour = 3600;
inline constexpr std::int64_t kSecPerDay = 86400;

/// A point in time, stored as seconds since the Unix epoch (UTC). Sensor
/// timestamps carry their UTC offset on input; the offset is kept alongside
/// the series, not on every instant.
struct Instant {
  std::int64_t sec = 0;

  friend auto operator<=>(const Instant&, const Instant&) = default;
  Instant operator+(std::int64_t s) const { return {sec + s}; }
  Instant operator-(std::int64_t s) const { return {sec - s}; }
  std::int64_t operator-(const Instant& o) const { return sec - o.sec; }
};

inline double days_between(Instant a, Instant b) {
  return double(b.sec - a.sec) / double(kSecPerDay);
}

struct CivilDate {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31

  friend auto operator<=>(const CivilDate&, const CivilDate&) = default;
};

struct CivilDateTime {
  CivilDate date;
  int hour = 0;
  int minute = 0;
  int second = 0;
};

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// civil-days algorithm).
constexpr std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return {static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

constexpr bool is_leap_year(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

constexpr int days_in_month(int y, int m) {
  constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap_year(y)) return 29;
  return lengths[m - 1];
}

/// Instant of a local civil date-time under a fixed UTC offset in minutes.
constexpr Instant make_instant(const CivilDateTime& c, int utc_offset_min) {
  const std::int64_t local = days_from_civil(c.date.year, c.date.month, c.date.day) * kSecPerDay +
                             c.hour * kSecPerHour + c.minute * kSecPerMin + c.second;
  return {local - std::int64_t(utc_offset_min) * kSecPerMin};
}

constexpr CivilDateTime civil_of(Instant t, int utc_offset_min) {
  const std::int64_t local = t.sec + std::int64_t(utc_offset_min) * kSecPerMin;
  std::int64_t days = local / kSecPerDay;
  std::int64_t rem = local % kSecPerDay;
  if (rem < 0) {
    rem += kSecPerDay;
    --days;
  }
  CivilDateTime out;
  out.date = civil_from_days(days);
  out.hour = static_cast<int>(rem / kSecPerHour);
  out.minute = static_cast<int>((rem % kSecPerHour) / kSecPerMin);
  out.second = static_cast<int>(rem % kSecPerMin);
  return out;
}

constexpr CivilDate local_date(Instant t, int utc_offset_min) {
  return civil_of(t, utc_offset_min).date;
}

struct ParsedTimestamp {
  Instant t;
  int utc_offset_min = 0;
};

namespace detail {
inline bool read_digits(std::string_view s, std::size_t pos, int count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (int i = 0; i < count; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}
}  // namespace detail

/// Parse `YYYY-MM-DDTHH:MM[:SS][Z|±HH:MM]`. A space may replace the `T`.
/// A missing offset is read as UTC. Returns nullopt on any malformation.
inline std::optional<ParsedTimestamp> parse_iso8601(std::string_view s) {
  using detail::read_digits;
  int year, month, day, hour, minute, second = 0;
  if (!read_digits(s, 0, 4, year) || s.size() < 16) return std::nullopt;
  if (s[4] != '-' || !read_digits(s, 5, 2, month)) return std::nullopt;
  if (s[7] != '-' || !read_digits(s, 8, 2, day)) return std::nullopt;
  if ((s[10] != 'T' && s[10] != ' ') || !read_digits(s, 11, 2, hour)) return std::nullopt;
  if (s[13] != ':' || !read_digits(s, 14, 2, minute)) return std::nullopt;
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    if (!read_digits(s, pos + 1, 2, second)) return std::nullopt;
    pos += 3;
  }
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) return std::nullopt;
  if (hour > 23 || minute > 59 || second > 59) return std::nullopt;

  int offset_min = 0;
  if (pos < s.size()) {
    const char c = s[pos];
    if (c == 'Z') {
      ++pos;
    } else if (c == '+' || c == '-') {
      int oh, om;
      if (!read_digits(s, pos + 1, 2, oh)) return std::nullopt;
      if (pos + 3 >= s.size() || s[pos + 3] != ':' || !read_digits(s, pos + 4, 2, om))
        return std::nullopt;
      if (oh > 18 || om > 59) return std::nullopt;
      offset_min = oh * 60 + om;
      if (c == '-') offset_min = -offset_min;
      pos += 6;
    } else {
      return std::nullopt;
    }
  }
  if (pos != s.size()) return std::nullopt;

  CivilDateTime c{{year, month, day}, hour, minute, second};
  return ParsedTimestamp{make_instant(c, offset_min), offset_min};
}

namespace detail {

inline std::string fixed6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string opt_fixed6(const std::optional<double>& v) {
  return v ? fixed6(*v) : std::string();
}

}  // namespace detail

/// Format as `YYYY-MM-DDTHH:MM:SS±HH:MM` under the given fixed offset.
inline std::string format_iso8601(Instant t, int utc_offset_min) {
  const CivilDateTime c = civil_of(t, utc_offset_min);
  const int oa = utc_offset_min < 0 ? -utc_offset_min : utc_offset_min;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d%c%02d:%02d", c.date.year,
                c.date.month, c.date.day, c.hour, c.minute, c.second,
                utc_offset_min < 0 ? '-' : '+', oa / 60, oa % 60);
  return buf;
}

}  // namespace hivemon
