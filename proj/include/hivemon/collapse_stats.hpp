#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hivemon/errors.hpp"
#include "hivemon/ingest.hpp"
#include "hivemon/timeutil.hpp"

namespace hivemon {

/// Centered rolling mean and population standard deviation of one series.
struct RollingStats {
  int window_days = 0;
  std::vector<Instant> t_center;
  std::vector<double> mean;
  std::vector<double> stddev;
};

inline constexpr int kStatsWindowMinDays = 4;
inline constexpr int kStatsWindowMaxDays = 10;

/// Rolling mean/std over centered windows stepped by `step_min` (default one
/// day). Window lengths follow the statistical-feature analysis range of 4
/// to 10 days; incomplete windows (holes or edges) are skipped.
inline RollingStats rolling_mean_std(const TemperatureSeries& s, int window_days,
                                     int step_min = 1440) {
  if (window_days < kStatsWindowMinDays || window_days > kStatsWindowMaxDays)
    throw std::invalid_argument("window must be between 4 and 10 days");
  if (step_min <= 0) throw std::invalid_argument("step must be positive");
  RollingStats out;
  out.window_days = window_days;
  if (s.empty()) throw WindowTooLong();
  const std::int64_t window = std::int64_t(window_days) * kSecPerDay;
  const std::int64_t interval = std::int64_t(s.interval_min) * kSecPerMin;
  if (s.end() - s.start() + interval < window) throw WindowTooLong();

  const std::int64_t step = std::int64_t(step_min) * kSecPerMin;
  const std::size_t expected = std::size_t(window / interval);
  for (Instant lo = s.start(); lo + window <= s.end() + interval; lo = lo + step) {
    const std::size_t a = s.lower_bound(lo);
    std::size_t b = a;
    double sum = 0.0;
    while (b < s.size() && s.readings[b].t < lo + window) {
      sum += s.readings[b].temp_c;
      ++b;
    }
    const std::size_t n = b - a;
    if (n != expected || n == 0) continue;  // hole or ragged edge
    const double mean = sum / double(n);
    double ss = 0.0;
    for (std::size_t i = a; i < b; ++i) {
      const double d = s.readings[i].temp_c - mean;
      ss += d * d;
    }
    out.t_center.push_back(lo + window / 2);
    out.mean.push_back(mean);
    out.stddev.push_back(std::sqrt(ss / double(n)));
  }
  if (out.t_center.empty()) throw WindowTooLong();
  return out;
}

/// First differences of the rolling standard deviation sequence.
inline std::vector<double> std_increments(const RollingStats& stats) {
  if (stats.stddev.size() < 2) throw TooFewWindows();
  std::vector<double> out(stats.stddev.size() - 1);
  for (std::size_t i = 1; i < stats.stddev.size(); ++i) out[i - 1] = stats.stddev[i] - stats.stddev[i - 1];
  return out;
}

/// Normalised histogram over shared edges; values outside the range are
/// clamped into the end bins and counted.
struct IncrementPdf {
  std::vector<double> edges;
  std::vector<double> prob;
  std::size_t clamped = 0;
};

inline std::vector<double> default_increment_edges(double lo = -2.0, double hi = 2.0,
                                                   std::size_t bins = 41) {
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    edges[i] = lo + (hi - lo) * double(i) / double(bins);
  return edges;
}

inline IncrementPdf increment_pdf(std::span<const double> increments,
                                  std::span<const double> edges) {
  if (increments.empty()) throw EmptyIncrements();
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw std::invalid_argument("edges must be strictly increasing");
  IncrementPdf out;
  out.edges.assign(edges.begin(), edges.end());
  out.prob.assign(edges.size() - 1, 0.0);
  const std::size_t last = out.prob.size() - 1;
  for (const double v : increments) {
    std::size_t b;
    if (v < edges.front()) {
      b = 0;
      ++out.clamped;
    } else if (v >= edges.back()) {
      b = last;
      ++out.clamped;
    } else {
      b = std::size_t(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin()) - 1;
    }
    out.prob[b] += 1.0;
  }
  for (double& p : out.prob) p /= double(increments.size());
  return out;
}

/// Squared L1 distance between two PDFs on identical binning:
/// (sum_i |p_i - q_i|)^2, in [0, 4].
inline double divergence_error(const IncrementPdf& p_env, const IncrementPdf& p_hive) {
  if (p_env.edges != p_hive.edges) throw BinMismatch();
  double l1 = 0.0;
  for (std::size_t i = 0; i < p_env.prob.size(); ++i)
    l1 += std::abs(p_env.prob[i] - p_hive.prob[i]);
  return l1 * l1;
}

/// Detection rule configuration; the correlation threshold operationalises
/// "the standard deviation scales with the environmental temperature". When
/// either std sequence is nearly constant the correlation is undefined and a
/// mean-ratio test takes over.
struct OnsetConfig {
  double optimal_lo = 33.0;
  double optimal_hi = 36.0;
  int window_min_days = kStatsWindowMinDays;
  int window_max_days = kStatsWindowMaxDays;
  int step_min = 1440;
  double corr_min = 0.8;
  double sigma_seq_epsilon = 0.05;  // below this std-of-stds, use the ratio test
  double scale_ratio_min = 0.5;
};

struct ErrorCurvePoint {
  Instant t;
  double mean = 0.0;
  double sem = 0.0;
  std::size_t n_windows = 0;
};

struct CollapseOnsetResult {
  std::optional<Instant> onset;
  std::vector<ErrorCurvePoint> error_curve;
};

namespace detail {

struct SeqStats {
  double mean = 0.0;
  double sd = 0.0;
};

inline SeqStats seq_stats(std::span<const double> v) {
  SeqStats st;
  if (v.empty()) return st;
  for (const double x : v) st.mean += x;
  st.mean /= double(v.size());
  double ss = 0.0;
  for (const double x : v) ss += (x - st.mean) * (x - st.mean);
  st.sd = std::sqrt(ss / double(v.size()));
  return st;
}

inline double seq_corr(std::span<const double> x, std::span<const double> y) {
  const SeqStats sx = seq_stats(x), sy = seq_stats(y);
  double c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) c += (x[i] - sx.mean) * (y[i] - sy.mean);
  return c / (double(x.size()) * sx.sd * sy.sd);
}

}  // namespace detail

namespace detail {

// Rolling stats of env and hive paired by window center time.
struct PairedRolling {
  std::vector<Instant> t_center;
  std::vector<double> sig_e, sig_h, mean_h;
};

inline PairedRolling pair_rolling(const RollingStats& e, const RollingStats& h) {
  PairedRolling out;
  std::size_t i = 0, j = 0;
  while (i < e.t_center.size() && j < h.t_center.size()) {
    if (e.t_center[i] == h.t_center[j]) {
      out.t_center.push_back(e.t_center[i]);
      out.sig_e.push_back(e.stddev[i]);
      out.sig_h.push_back(h.stddev[j]);
      out.mean_h.push_back(h.mean[j]);
      ++i;
      ++j;
    } else if (e.t_center[i] < h.t_center[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

}  // namespace detail

/// Statistical collapse-onset detector: the earliest window center from
/// which (a) the rolling hive mean stays outside the optimal band for every
/// subsequent window, and (b) the hive std sequence scales with the env std
/// sequence over the remaining record. Also returns the divergence Error,
/// accumulated from the record start up to daily checkpoints and averaged
/// across the window-length sweep with its standard error, for plateau
/// inspection.
inline CollapseOnsetResult collapse_onset_statistical(const TemperatureSeries& env,
                                                      const TemperatureSeries& hive,
                                                      const OnsetConfig& cfg = {}) {
  CollapseOnsetResult out;
  const auto edges = default_increment_edges();

  struct WindowIncrements {
    std::vector<Instant> t;  // time of each increment (second window's center)
    std::vector<double> inc_e, inc_h;
  };
  std::vector<WindowIncrements> sweep;
  Instant last_t{std::numeric_limits<std::int64_t>::min()};
  for (int w = cfg.window_min_days; w <= cfg.window_max_days; ++w) {
    RollingStats se, sh;
    try {
      se = rolling_mean_std(env, w, cfg.step_min);
      sh = rolling_mean_std(hive, w, cfg.step_min);
    } catch (const WindowTooLong&) {
      continue;
    }
    const detail::PairedRolling pr = detail::pair_rolling(se, sh);
    WindowIncrements wi;
    for (std::size_t i = 1; i < pr.t_center.size(); ++i) {
      wi.t.push_back(pr.t_center[i]);
      wi.inc_e.push_back(pr.sig_e[i] - pr.sig_e[i - 1]);
      wi.inc_h.push_back(pr.sig_h[i] - pr.sig_h[i - 1]);
      last_t = std::max(last_t, pr.t_center[i]);
    }
    if (!wi.t.empty()) sweep.push_back(std::move(wi));
  }

  if (!sweep.empty() && !env.empty()) {
    const std::int64_t step = std::int64_t(cfg.step_min) * kSecPerMin;
    for (Instant cp = env.start(); cp <= last_t; cp = cp + step) {
      std::vector<double> errs;
      for (const WindowIncrements& wi : sweep) {
        const auto n_inc = std::size_t(
            std::upper_bound(wi.t.begin(), wi.t.end(), cp) - wi.t.begin());
        if (n_inc == 0) continue;
        const auto pdf_e = increment_pdf(std::span(wi.inc_e.data(), n_inc), edges);
        const auto pdf_h = increment_pdf(std::span(wi.inc_h.data(), n_inc), edges);
        errs.push_back(divergence_error(pdf_e, pdf_h));
      }
      if (errs.empty()) continue;
      ErrorCurvePoint p;
      p.t = cp;
      p.n_windows = errs.size();
      for (const double e : errs) p.mean += e;
      p.mean /= double(errs.size());
      if (errs.size() > 1) {
        double ss = 0.0;
        for (const double e : errs) ss += (e - p.mean) * (e - p.mean);
        p.sem = std::sqrt(ss / double(errs.size() - 1)) / std::sqrt(double(errs.size()));
      }
      out.error_curve.push_back(p);
    }
  }

  // Onset conditions evaluated on the shortest window length.
  RollingStats me, mh;
  try {
    me = rolling_mean_std(env, cfg.window_min_days, cfg.step_min);
    mh = rolling_mean_std(hive, cfg.window_min_days, cfg.step_min);
  } catch (const WindowTooLong&) {
    return out;
  }
  const detail::PairedRolling pr = detail::pair_rolling(me, mh);
  const std::size_t n = pr.t_center.size();
  if (n == 0) return out;

  std::vector<bool> suffix_out(n + 1, true);
  for (std::size_t i = n; i-- > 0;) {
    const bool outside = pr.mean_h[i] < cfg.optimal_lo || pr.mean_h[i] > cfg.optimal_hi;
    suffix_out[i] = outside && suffix_out[i + 1];
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!suffix_out[i]) continue;
    const std::span<const double> sig_e(pr.sig_e.data() + i, n - i);
    const std::span<const double> sig_h(pr.sig_h.data() + i, n - i);
    bool scales = false;
    const auto st_e = detail::seq_stats(sig_e);
    const auto st_h = detail::seq_stats(sig_h);
    if (st_e.sd < cfg.sigma_seq_epsilon || st_h.sd < cfg.sigma_seq_epsilon) {
      scales = st_e.mean > 0.0 && st_h.mean / st_e.mean >= cfg.scale_ratio_min;
    } else if (sig_e.size() >= 3) {
      scales = detail::seq_corr(sig_e, sig_h) > cfg.corr_min;
    }
    if (scales) {
      out.onset = pr.t_center[i];
      break;
    }
  }
  return out;
}

// --- file formats ---

inline void write_rolling_stats_csv(std::ostream& out,
                                    const std::map<std::string, std::vector<RollingStats>>& stats,
                                    int utc_offset_min) {
  out << "hive_id,window_days,t_center,mean,std\n";
  for (const auto& [hive_id, windows] : stats) {
    for (const RollingStats& rs : windows) {
      for (std::size_t i = 0; i < rs.t_center.size(); ++i) {
        out << hive_id << ',' << rs.window_days << ','
            << format_iso8601(rs.t_center[i], utc_offset_min) << ','
            << detail::fixed6(rs.mean[i]) << ',' << detail::fixed6(rs.stddev[i]) << '\n';
      }
    }
  }
}

inline void write_error_curve_csv(std::ostream& out,
                                  const std::map<std::string, CollapseOnsetResult>& results,
                                  int utc_offset_min) {
  out << "hive_id,t,error_mean,error_sem,n_windows\n";
  for (const auto& [hive_id, r] : results) {
    for (const ErrorCurvePoint& p : r.error_curve) {
      out << hive_id << ',' << format_iso8601(p.t, utc_offset_min) << ','
          << detail::fixed6(p.mean) << ',' << detail::fixed6(p.sem) << ',' << p.n_windows << '\n';
    }
  }
}

}  // namespace hivemon
