#pragma once

#include <algorithm>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hivemon/estimators.hpp"
#include "hivemon/ingest.hpp"
#include "hivemon/timeutil.hpp"

namespace hivemon {

enum class Status { Stable, Warning, Collapsed, Unknown };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Stable: return "stable";
    case Status::Warning: return "warning";
    case Status::Collapsed: return "collapsed";
    case Status::Unknown: return "unknown";
  }
  return "?";
}

/// Whether a warning needs either indicator below threshold or both.
enum class WarnCombinator { Any, All };

/// Classification thresholds. Collapse depends on pi alone; outside winter a
/// warning is raised from pi and delta_t; in winter only pi below the
/// elevated winter threshold warns, since broodless colonies let the
/// indicators drop and recover in spring.
struct StatusThresholds {
  double pi_warn = 3.5;
  double delta_t_warn = 8.0;
  double pi_collapse = 1.5;
  double winter_pi_warn = 1.5;
  int confirm_days = 2;
  WarnCombinator warn_combinator = WarnCombinator::Any;

  bool valid() const {
    return pi_collapse <= winter_pi_warn && winter_pi_warn <= pi_warn && confirm_days >= 1;
  }
};

inline Status classify_point(const WindowEstimate& est, Season season,
                             const StatusThresholds& th) {
  if (est.degeneracy == Degeneracy::Perfect) return Status::Stable;
  if (est.degeneracy == Degeneracy::Invalid) return Status::Unknown;
  const double pi = *est.pi;
  if (pi < th.pi_collapse) return Status::Collapsed;
  if (season == Season::Winter) return pi < th.winter_pi_warn ? Status::Warning : Status::Stable;
  const bool pi_low = pi < th.pi_warn;
  const bool dt_low = est.delta_t && *est.delta_t < th.delta_t_warn;
  const bool warn =
      th.warn_combinator == WarnCombinator::Any ? (pi_low || dt_low) : (pi_low && dt_low);
  return warn ? Status::Warning : Status::Stable;
}

struct StatusPoint {
  Instant t;
  Status status = Status::Unknown;
  Season season = Season::Summer;
  std::optional<double> pi;
  std::optional<double> delta_t;
};

/// First instant from which the classified points agree on Collapsed for a
/// full confirmation span covering at least two calendar days. Unknown
/// points inside the span are tolerated; the record must extend through the
/// span for the onset to be declared.
inline std::optional<Instant> confirm_collapse(std::span<const StatusPoint> points,
                                               int confirm_days, int utc_offset_min) {
  const std::int64_t span = std::int64_t(confirm_days) * kSecPerDay;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].status != Status::Collapsed) continue;
    const Instant t0 = points[i].t;
    bool consistent = true;
    bool covered = false;
    std::set<CivilDate> dates;
    for (std::size_t j = i; j < points.size(); ++j) {
      if (points[j].t - t0 > span) {
        covered = true;
        break;
      }
      if (points[j].t - t0 == span) covered = true;
      if (points[j].status == Status::Unknown) continue;
      if (points[j].status != Status::Collapsed) {
        consistent = false;
        break;
      }
      dates.insert(local_date(points[j].t, utc_offset_min));
    }
    if (consistent && covered && dates.size() >= 2) return t0;
  }
  return std::nullopt;
}

struct WarningEpisode {
  Instant start;
  Instant end;
  double duration_days = 0.0;
  std::size_t flags = 0;
  std::optional<double> mean_flag_interval_min;  // absent for single-flag episodes
};

/// Maximal runs of consecutive Warning points. A non-Warning point closes a
/// run, but runs separated by less than the merge gap rejoin, so sub-day
/// dropouts or dips do not split one episode.
inline std::vector<WarningEpisode> warning_episodes(std::span<const StatusPoint> points,
                                                    double merge_gap_hours = 6.0) {
  std::vector<WarningEpisode> out;
  const std::int64_t merge_gap = std::int64_t(merge_gap_hours * double(kSecPerHour));
  bool run_open = false;
  for (const StatusPoint& p : points) {
    if (p.status != Status::Warning) {
      run_open = false;
      continue;
    }
    if (run_open || (!out.empty() && p.t - out.back().end < merge_gap)) {
      out.back().end = p.t;
      ++out.back().flags;
    } else {
      out.push_back({p.t, p.t, 0.0, 1, std::nullopt});
    }
    run_open = true;
  }
  for (WarningEpisode& e : out) {
    e.duration_days = days_between(e.start, e.end);
    if (e.flags > 1)
      e.mean_flag_interval_min = double(e.end - e.start) / double(e.flags - 1) / double(kSecPerMin);
  }
  return out;
}

/// Per-hive classified timeline with confirmed collapse onset and warning
/// episode statistics.
struct StatusTimeline {
  std::string hive_id;
  Method method = Method::CrossCorr;
  std::vector<StatusPoint> points;
  std::optional<Instant> collapse_onset;
  std::vector<WarningEpisode> episodes;
};

inline StatusTimeline build_timeline(const std::string& hive_id,
                                     const std::vector<WindowEstimate>& estimates,
                                     Hemisphere hemisphere, int utc_offset_min,
                                     const StatusThresholds& th) {
  if (!th.valid()) throw Error("invalid thresholds: need pi_collapse <= winter_pi_warn <= pi_warn");
  StatusTimeline tl;
  tl.hive_id = hive_id;
  if (!estimates.empty()) tl.method = estimates.front().method;
  tl.points.reserve(estimates.size());
  for (const WindowEstimate& e : estimates) {
    StatusPoint p;
    p.t = e.t_center;
    p.season = season_of(e.t_center, hemisphere, utc_offset_min);
    p.status = classify_point(e, p.season, th);
    p.pi = e.pi;
    p.delta_t = e.delta_t;
    tl.points.push_back(p);
  }
  std::sort(tl.points.begin(), tl.points.end(),
            [](const StatusPoint& a, const StatusPoint& b) { return a.t < b.t; });
  tl.collapse_onset = confirm_collapse(tl.points, th.confirm_days, utc_offset_min);
  tl.episodes = warning_episodes(tl.points);
  return tl;
}

// --- timeline file formats ---

inline constexpr const char* kTimelineCsvHeader = "t,hive_id,status,pi,delta_t,season";

inline void write_timeline_csv(std::ostream& out, const StatusTimeline& tl, int utc_offset_min) {
  out << kTimelineCsvHeader << '\n';
  for (const StatusPoint& p : tl.points) {
    out << format_iso8601(p.t, utc_offset_min) << ',' << tl.hive_id << ',' << to_string(p.status)
        << ',' << detail::opt_fixed6(p.pi) << ',' << detail::opt_fixed6(p.delta_t) << ','
        << to_string(p.season) << '\n';
  }
}

inline nlohmann::json timeline_summary_json(const StatusTimeline& tl, int utc_offset_min) {
  nlohmann::json j;
  j["hive_id"] = tl.hive_id;
  j["method"] = to_string(tl.method);
  j["points"] = tl.points.size();
  std::size_t warnings = 0, collapsed = 0, unknown = 0;
  for (const StatusPoint& p : tl.points) {
    warnings += p.status == Status::Warning;
    collapsed += p.status == Status::Collapsed;
    unknown += p.status == Status::Unknown;
  }
  j["warning_points"] = warnings;
  j["collapsed_points"] = collapsed;
  j["unknown_points"] = unknown;
  j["collapse_onset"] = tl.collapse_onset
                            ? nlohmann::json(format_iso8601(*tl.collapse_onset, utc_offset_min))
                            : nlohmann::json();
  j["warning_episodes"] = nlohmann::json::array();
  for (const WarningEpisode& e : tl.episodes) {
    nlohmann::json ej;
    ej["start"] = format_iso8601(e.start, utc_offset_min);
    ej["end"] = format_iso8601(e.end, utc_offset_min);
    ej["duration_days"] = e.duration_days;
    ej["flags"] = e.flags;
    ej["mean_flag_interval_min"] =
        e.mean_flag_interval_min ? nlohmann::json(*e.mean_flag_interval_min) : nlohmann::json();
    j["warning_episodes"].push_back(ej);
  }
  return j;
}

}  // namespace hivemon
