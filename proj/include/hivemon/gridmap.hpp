#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hivemon/classify.hpp"
#include "hivemon/estimators.hpp"
#include "hivemon/ingest.hpp"

namespace hivemon {

/// Half-open 0.5 x 0.5 binning of (pi, delta_t); out-of-range values clamp
/// to the edge cells and are counted separately.
struct GridSpec {
  double cell = 0.5;
  double pi_lo = 0.0;
  double pi_hi = kPiCap;
  double dt_lo = -5.0;
  double dt_hi = 20.0;

  int ni() const { return int(std::lround((pi_hi - pi_lo) / cell)); }
  int nj() const { return int(std::lround((dt_hi - dt_lo) / cell)); }
};

struct BinIndex {
  int i = 0;
  int j = 0;
  bool clamped = false;
};

inline BinIndex bin(double pi, double delta_t, const GridSpec& spec) {
  BinIndex out;
  out.i = int(std::floor((pi - spec.pi_lo) / spec.cell));
  out.j = int(std::floor((delta_t - spec.dt_lo) / spec.cell));
  if (out.i < 0 || out.i >= spec.ni() || out.j < 0 || out.j >= spec.nj()) {
    out.clamped = true;
    out.i = std::clamp(out.i, 0, spec.ni() - 1);
    out.j = std::clamp(out.j, 0, spec.nj() - 1);
  }
  return out;
}

enum class HiveClass { Healthy, EventuallyCollapsed };

/// One estimate placed on the grid.
struct LabeledPoint {
  std::string hive_id;
  double pi = 0.0;
  double delta_t = 0.0;
  Season season = Season::Summer;
  HiveClass label = HiveClass::Healthy;
  Instant t_center;
};

inline std::vector<LabeledPoint> label_estimates(const std::string& hive_id,
                                                 const std::vector<WindowEstimate>& estimates,
                                                 HiveClass label, Hemisphere hemisphere,
                                                 int utc_offset_min) {
  std::vector<LabeledPoint> out;
  out.reserve(estimates.size());
  for (const WindowEstimate& e : estimates) {
    if (!e.pi || !e.delta_t) continue;  // invalid or perfect-degenerate points carry no position
    out.push_back({hive_id, *e.pi, *e.delta_t, season_of(e.t_center, hemisphere, utc_offset_min),
                   label, e.t_center});
  }
  return out;
}

struct GridCellSummary {
  int i = 0;
  int j = 0;
  double pi_lo = 0.0;
  double dt_lo = 0.0;
  std::size_t n_total = 0;
  std::size_t n_collapsed_class = 0;
  double prop_collapsed = 0.0;
  Season dominant_season = Season::Summer;
  double dominant_season_freq = 0.0;
  std::array<std::size_t, 4> season_counts{};  // indexed by Season
  std::optional<double> mean_days_to_collapse;
};

struct GridSummary {
  GridSpec spec;
  std::vector<GridCellSummary> cells;  // sorted by (i, j), only non-empty cells
  std::size_t clamped = 0;
  std::size_t total = 0;
};

/// Accumulate labelled points into per-cell tallies: the proportion of
/// points from eventually-collapsed hives, the dominant season with its
/// relative frequency, and the mean days between each collapsed-hive point
/// and that hive's onset.
inline GridSummary accumulate(const std::vector<LabeledPoint>& points,
                              const std::map<std::string, Instant>& collapse_onsets,
                              const GridSpec& spec = {}) {
  struct CellAcc {
    std::size_t n = 0;
    std::size_t n_collapsed = 0;
    std::array<std::size_t, 4> seasons{};
    double days_sum = 0.0;
    std::size_t days_n = 0;
  };
  std::map<std::pair<int, int>, CellAcc> acc;
  GridSummary out;
  out.spec = spec;
  out.total = points.size();

  for (const LabeledPoint& p : points) {
    const BinIndex b = bin(p.pi, p.delta_t, spec);
    if (b.clamped) {
      ++out.clamped;
      continue;
    }
    CellAcc& c = acc[{b.i, b.j}];
    ++c.n;
    ++c.seasons[std::size_t(p.season)];
    if (p.label == HiveClass::EventuallyCollapsed) {
      ++c.n_collapsed;
      const auto onset = collapse_onsets.find(p.hive_id);
      if (onset == collapse_onsets.end()) throw MissingOnset(p.hive_id);
      c.days_sum += days_between(p.t_center, onset->second);
      ++c.days_n;
    }
  }

  out.cells.reserve(acc.size());
  for (const auto& [idx, c] : acc) {
    GridCellSummary cell;
    cell.i = idx.first;
    cell.j = idx.second;
    cell.pi_lo = spec.pi_lo + idx.first * spec.cell;
    cell.dt_lo = spec.dt_lo + idx.second * spec.cell;
    cell.n_total = c.n;
    cell.n_collapsed_class = c.n_collapsed;
    cell.prop_collapsed = double(c.n_collapsed) / double(c.n);
    cell.season_counts = c.seasons;
    std::size_t best = 0;
    for (std::size_t s = 1; s < 4; ++s)
      if (c.seasons[s] > c.seasons[best]) best = s;
    cell.dominant_season = Season(best);
    cell.dominant_season_freq = double(c.seasons[best]) / double(c.n);
    if (c.days_n > 0) cell.mean_days_to_collapse = c.days_sum / double(c.days_n);
    out.cells.push_back(cell);
  }
  return out;
}

/// Status zones induced on the pi axis by the classification thresholds:
/// collapse [0, pi_collapse), warning [pi_collapse, pi_warn), stable above.
struct ZoneSummary {
  Status zone = Status::Stable;
  std::size_t n_points = 0;
  std::size_t n_healthy = 0;
  std::optional<double> healthy_ratio;  // absent for empty zones
};

inline std::array<ZoneSummary, 3> zone_summary(const std::vector<LabeledPoint>& points,
                                               const StatusThresholds& th = {}) {
  std::array<ZoneSummary, 3> zones;
  zones[0].zone = Status::Collapsed;
  zones[1].zone = Status::Warning;
  zones[2].zone = Status::Stable;
  for (const LabeledPoint& p : points) {
    std::size_t z = p.pi < th.pi_collapse ? 0 : (p.pi < th.pi_warn ? 1 : 2);
    ++zones[z].n_points;
    if (p.label == HiveClass::Healthy) ++zones[z].n_healthy;
  }
  for (ZoneSummary& z : zones)
    if (z.n_points > 0) z.healthy_ratio = double(z.n_healthy) / double(z.n_points);
  return zones;
}

// --- grid file formats ---

inline constexpr const char* kGridCsvHeader =
    "i,j,pi_lo,dt_lo,n_total,prop_collapsed,dominant_season,season_freq,mean_days_to_collapse";

inline void write_grid_csv(std::ostream& out, const GridSummary& g) {
  out << kGridCsvHeader << '\n';
  for (const GridCellSummary& c : g.cells) {
    out << c.i << ',' << c.j << ',' << detail::fixed6(c.pi_lo) << ',' << detail::fixed6(c.dt_lo)
        << ',' << c.n_total << ',' << detail::fixed6(c.prop_collapsed) << ','
        << to_string(c.dominant_season) << ',' << detail::fixed6(c.dominant_season_freq) << ','
        << detail::opt_fixed6(c.mean_days_to_collapse) << '\n';
  }
}

inline nlohmann::json grid_json(const GridSummary& g, const std::array<ZoneSummary, 3>& zones) {
  nlohmann::json j;
  j["cell"] = g.spec.cell;
  j["pi_range"] = {g.spec.pi_lo, g.spec.pi_hi};
  j["dt_range"] = {g.spec.dt_lo, g.spec.dt_hi};
  j["total_points"] = g.total;
  j["clamped_points"] = g.clamped;
  j["cells"] = nlohmann::json::array();
  for (const GridCellSummary& c : g.cells) {
    nlohmann::json cj;
    cj["i"] = c.i;
    cj["j"] = c.j;
    cj["pi_lo"] = c.pi_lo;
    cj["dt_lo"] = c.dt_lo;
    cj["n_total"] = c.n_total;
    cj["prop_collapsed"] = c.prop_collapsed;
    cj["dominant_season"] = to_string(c.dominant_season);
    cj["season_freq"] = c.dominant_season_freq;
    cj["mean_days_to_collapse"] =
        c.mean_days_to_collapse ? nlohmann::json(*c.mean_days_to_collapse) : nlohmann::json();
    j["cells"].push_back(cj);
  }
  j["zones"] = nlohmann::json::array();
  for (const ZoneSummary& z : zones) {
    nlohmann::json zj;
    zj["zone"] = to_string(z.zone);
    zj["n_points"] = z.n_points;
    zj["n_healthy"] = z.n_healthy;
    zj["healthy_ratio"] = z.healthy_ratio ? nlohmann::json(*z.healthy_ratio) : nlohmann::json();
    j["zones"].push_back(zj);
  }
  return j;
}

}  // namespace hivemon
