#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hivemon/errors.hpp"
#include "hivemon/timeutil.hpp"

namespace hivemon {

inline constexpr double kSensorMinC = -40.0;
inline constexpr double kSensorMaxC = 80.0;

enum class SensorKind { Environment, Hive };

struct Reading {
  Instant t;
  double temp_c = 0.0;
};

/// Uniformly sampled temperature record for one sensor. Timestamps are
/// strictly increasing and consecutive gaps are integer multiples of the
/// sampling interval; a gap larger than one interval marks missing samples.
struct TemperatureSeries {
  std::string sensor_id;
  SensorKind kind = SensorKind::Environment;
  int interval_min = 0;
  int utc_offset_min = 0;
  std::vector<Reading> readings;

  bool empty() const { return readings.empty(); }
  std::size_t size() const { return readings.size(); }
  Instant start() const { return readings.front().t; }
  Instant end() const { return readings.back().t; }

  /// Index of the first reading at or after `t`.
  std::size_t lower_bound(Instant t) const {
    auto it = std::lower_bound(readings.begin(), readings.end(), t,
                               [](const Reading& r, Instant v) { return r.t < v; });
    return static_cast<std::size_t>(it - readings.begin());
  }

  std::optional<std::size_t> index_of(Instant t) const {
    const std::size_t i = lower_bound(t);
    if (i < readings.size() && readings[i].t == t) return i;
    return std::nullopt;
  }

  /// True when [first, last] (by index) has no missing grid slots.
  bool contiguous(std::size_t first, std::size_t last) const {
    const std::int64_t span = readings[last].t - readings[first].t;
    return span == std::int64_t(last - first) * interval_min * kSecPerMin;
  }
};

enum class Season { Summer, Autumn, Winter, Spring };
enum class Hemisphere { North, South };

inline const char* to_string(Season s) {
  switch (s) {
    case Season::Summer: return "summer";
    case Season::Autumn: return "autumn";
    case Season::Winter: return "winter";
    case Season::Spring: return "spring";
  }
  return "?";
}

/// Meteorological season of the local month: in the south Dec-Feb is summer,
/// Mar-May autumn, Jun-Aug winter, Sep-Nov spring; the north is shifted by
/// six months.
inline Season season_of(Instant t, Hemisphere hemisphere, int utc_offset_min = 0) {
  int m = local_date(t, utc_offset_min).month;
  if (hemisphere == Hemisphere::North) m = m <= 6 ? m + 6 : m - 6;
  switch ((m % 12) / 3) {
    case 0: return Season::Summer;  // Dec, Jan, Feb
    case 1: return Season::Autumn;
    case 2: return Season::Winter;
    default: return Season::Spring;
  }
}

namespace detail {

inline std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string tmp(s);
  char* endp = nullptr;
  const double v = std::strtod(tmp.c_str(), &endp);
  if (endp != tmp.c_str() + tmp.size()) return std::nullopt;
  return v;
}

inline int modal_interval_min(const std::vector<Reading>& readings) {
  if (readings.size() < 2) return 1;
  std::map<std::int64_t, std::size_t> freq;
  for (std::size_t i = 1; i < readings.size(); ++i)
    ++freq[readings[i].t - readings[i - 1].t];
  std::int64_t best = 0;
  std::size_t best_n = 0;
  for (const auto& [gap, n] : freq) {
    if (n > best_n) {
      best = gap;
      best_n = n;
    }
  }
  return static_cast<int>(best / kSecPerMin);
}

}  // namespace detail

/// Parse a `timestamp,temp_c` CSV stream. Rows are sorted by timestamp, the
/// sampling interval is inferred as the modal gap, and every gap must be an
/// integer multiple of it. Line numbers in errors are 1-based and include
/// the header.
inline TemperatureSeries parse_series(std::istream& in, const std::string& sensor_id,
                                      SensorKind kind) {
  TemperatureSeries out;
  out.sensor_id = sensor_id;
  out.kind = kind;

  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  bool offset_set = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = detail::trim_cr(line);
    if (lineno == 1 && sv.starts_with("\xEF\xBB\xBF")) sv.remove_prefix(3);
    if (sv.empty()) continue;
    if (!header_seen) {
      if (sv != "timestamp,temp_c") throw MalformedRow(lineno, "expected header timestamp,temp_c");
      header_seen = true;
      continue;
    }
    const std::size_t comma = sv.find(',');
    if (comma == std::string_view::npos) throw MalformedRow(lineno, "missing comma");
    const auto ts = parse_iso8601(sv.substr(0, comma));
    if (!ts) throw MalformedRow(lineno, "bad timestamp");
    const auto temp = detail::parse_double(sv.substr(comma + 1));
    if (!temp || !std::isfinite(*temp)) throw MalformedRow(lineno, "bad temperature");
    if (*temp < kSensorMinC || *temp > kSensorMaxC)
      throw MalformedRow(lineno, "temperature outside sensor range");
    if (!offset_set) {
      out.utc_offset_min = ts->utc_offset_min;
      offset_set = true;
    }
    out.readings.push_back({ts->t, *temp});
  }
  if (out.readings.empty()) throw EmptyInput();

  std::stable_sort(out.readings.begin(), out.readings.end(),
                   [](const Reading& a, const Reading& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < out.readings.size(); ++i)
    if (out.readings[i].t == out.readings[i - 1].t)
      throw NonMonotonicAfterSort(format_iso8601(out.readings[i].t, out.utc_offset_min));

  out.interval_min = detail::modal_interval_min(out.readings);
  if (out.interval_min <= 0) throw IrregularSpacing("sub-minute sampling is not supported");
  const std::int64_t step = std::int64_t(out.interval_min) * kSecPerMin;
  for (std::size_t i = 1; i < out.readings.size(); ++i) {
    const std::int64_t gap = out.readings[i].t - out.readings[i - 1].t;
    if (gap % step != 0)
      throw IrregularSpacing(format_iso8601(out.readings[i].t, out.utc_offset_min));
  }
  return out;
}

inline TemperatureSeries parse_series_file(const std::filesystem::path& path,
                                           const std::string& sensor_id, SensorKind kind) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_series(in, sensor_id, kind);
}

inline void serialize_series(const TemperatureSeries& s, std::ostream& out) {
  out << "timestamp,temp_c\n";
  char buf[32];
  for (const Reading& r : s.readings) {
    std::snprintf(buf, sizeof(buf), "%.4f", r.temp_c);
    out << format_iso8601(r.t, s.utc_offset_min) << ',' << buf << '\n';
  }
}

namespace detail {

// Linearly interpolate internal gaps of at most max_gap minutes; longer gaps
// stay open and split the record for window-based analysis.
inline TemperatureSeries fill_small_gaps(const TemperatureSeries& s, int max_gap_min) {
  TemperatureSeries out = s;
  out.readings.clear();
  out.readings.reserve(s.readings.size());
  const std::int64_t step = std::int64_t(s.interval_min) * kSecPerMin;
  for (std::size_t i = 0; i < s.readings.size(); ++i) {
    if (i > 0) {
      const Reading& prev = s.readings[i - 1];
      const Reading& cur = s.readings[i];
      const std::int64_t gap = cur.t - prev.t;
      if (gap > step && gap <= std::int64_t(max_gap_min) * kSecPerMin) {
        for (std::int64_t off = step; off < gap; off += step) {
          const double frac = double(off) / double(gap);
          out.readings.push_back(
              {prev.t + off, prev.temp_c + frac * (cur.temp_c - prev.temp_c)});
        }
      }
    }
    out.readings.push_back(s.readings[i]);
  }
  return out;
}

}  // namespace detail

/// Put two series onto a common timestamp grid: fill internal gaps of at most
/// `max_gap_min` by linear interpolation, then keep the intersection of the
/// two grids. The outputs have identical timestamp vectors; any surviving
/// gaps are analysis-time splits.
inline std::pair<TemperatureSeries, TemperatureSeries> align(const TemperatureSeries& env,
                                                             const TemperatureSeries& hive,
                                                             int max_gap_min = 60) {
  if (env.empty() || hive.empty()) throw NoOverlap();
  const TemperatureSeries a = detail::fill_small_gaps(env, max_gap_min);
  const TemperatureSeries b = detail::fill_small_gaps(hive, max_gap_min);

  TemperatureSeries out_a = a, out_b = b;
  out_a.readings.clear();
  out_b.readings.clear();
  std::size_t i = 0, j = 0;
  while (i < a.readings.size() && j < b.readings.size()) {
    if (a.readings[i].t == b.readings[j].t) {
      out_a.readings.push_back(a.readings[i++]);
      out_b.readings.push_back(b.readings[j++]);
    } else if (a.readings[i].t < b.readings[j].t) {
      ++i;
    } else {
      ++j;
    }
  }
  if (out_a.readings.empty()) throw NoOverlap();
  out_a.interval_min = detail::modal_interval_min(out_a.readings);
  out_b.interval_min = out_a.interval_min;
  return {std::move(out_a), std::move(out_b)};
}

/// One apiary data set: a shared environment record plus hive records,
/// loaded from a JSON manifest.
struct HiveDataset {
  TemperatureSeries env;
  std::map<std::string, TemperatureSeries> hives;
  Hemisphere hemisphere = Hemisphere::South;
  std::string label;

  int utc_offset_min() const { return env.utc_offset_min; }
};

inline Hemisphere parse_hemisphere(const std::string& s) {
  if (s == "north") return Hemisphere::North;
  if (s == "south") return Hemisphere::South;
  throw Error("hemisphere must be \"north\" or \"south\", got \"" + s + "\"");
}

/// Manifest schema: {"label": ..., "hemisphere": "north"|"south",
/// "env": "env.csv", "hives": {"id": "file.csv", ...}}; relative paths are
/// resolved against the manifest directory.
inline HiveDataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("cannot open manifest " + manifest_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad manifest " + manifest_path.string() + ": " + e.what());
  }
  const auto dir = manifest_path.parent_path();
  auto resolve = [&dir](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : dir / fp;
  };

  HiveDataset ds;
  try {
    ds.label = j.at("label").get<std::string>();
    ds.hemisphere = parse_hemisphere(j.at("hemisphere").get<std::string>());
    ds.env = parse_series_file(resolve(j.at("env").get<std::string>()), "env",
                               SensorKind::Environment);
    for (const auto& [id, file] : j.at("hives").items())
      ds.hives.emplace(id,
                       parse_series_file(resolve(file.get<std::string>()), id, SensorKind::Hive));
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad manifest " + manifest_path.string() + ": " + e.what());
  }
  if (ds.hives.empty()) throw Error("manifest lists no hives");
  return ds;
}

inline void save_manifest(const std::filesystem::path& manifest_path, const std::string& label,
                          Hemisphere hemisphere, const std::string& env_file,
                          const std::map<std::string, std::string>& hive_files) {
  nlohmann::json j;
  j["label"] = label;
  j["hemisphere"] = hemisphere == Hemisphere::North ? "north" : "south";
  j["env"] = env_file;
  j["hives"] = nlohmann::json::object();
  for (const auto& [id, file] : hive_files) j["hives"][id] = file;
  std::ofstream out(manifest_path);
  if (!out) throw Error("cannot write " + manifest_path.string());
  out << j.dump(2) << '\n';
}

}  // namespace hivemon
