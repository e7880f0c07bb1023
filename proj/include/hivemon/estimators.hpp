#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hivemon/errors.hpp"
#include "hivemon/ingest.hpp"
#include "hivemon/timeutil.hpp"

namespace hivemon {

/// Indicator ceiling: slopes at or below exp(-kPiCap) report the capped value.
inline constexpr double kPiCap = 6.0;
inline constexpr double kMFloor = 0.0024787521766663585;  // exp(-kPiCap)

inline constexpr std::int64_t kResponseWindowSec = 2 * kSecPerHour;
inline constexpr double kVarEpsilon = 1e-18;

/// Linear response model of hive temperature to environmental temperature:
/// th = (te - (t_d - delta_t)) * m + t_d. Slope m in [0, 1]: 0 is a perfectly
/// regulated hive, 1 an empty one.
struct ThermoModel {
  double m = 0.0;
  double delta_t = 0.0;
  double t_d = 34.5;
};

inline double predict_hive_temp(const ThermoModel& model, double te) {
  return (te - (model.t_d - model.delta_t)) * model.m + model.t_d;
}

struct PiValue {
  double pi = 0.0;
  bool clamped = false;  // fitted slope exceeded 1 and was clamped
};

/// Map a slope to the status indicator pi = -ln m, capped at kPiCap for
/// m <= kMFloor and clamped to 0 for m > 1. Negative slopes must be filtered
/// by the caller.
inline PiValue pi_of_slope_checked(double m) {
  if (std::isnan(m) || m < 0.0) throw NegativeSlope();
  if (m > 1.0) return {0.0, true};
  if (m <= kMFloor) return {kPiCap, false};
  return {-std::log(m), false};
}

inline double pi_of_slope(double m) { return pi_of_slope_checked(m).pi; }

/// Invert the model for delta_t from window averages:
/// delta_t = (mean_th - t_d) / m + t_d - mean_te.
inline double delta_t_from_window(double m, double mean_th, double mean_te, double t_d) {
  if (!(m > kMFloor)) throw DegenerateSlope();
  return (mean_th - t_d) / m + t_d - mean_te;
}

enum class Method { Extremes, CrossCorr };

inline const char* to_string(Method m) {
  return m == Method::Extremes ? "extremes" : "crosscorr";
}

inline std::optional<Method> method_from_string(std::string_view s) {
  if (s == "extremes") return Method::Extremes;
  if (s == "crosscorr") return Method::CrossCorr;
  return std::nullopt;
}

enum class Degeneracy {
  None,
  Perfect,  // flat hive record: ideal regulation, pi reported at the cap
  Invalid,  // negative slope / constant environment: no usable estimate
};

/// One rolling-window estimate of the model indicators.
struct WindowEstimate {
  Instant t_center;
  Method method = Method::CrossCorr;
  std::optional<double> m;
  std::optional<double> pi;
  std::optional<double> delta_t;
  std::optional<int> tau_star_min;   // cross-correlation method only
  std::optional<double> rho_star;    // cross-correlation method only
  std::size_t n = 0;
  Degeneracy degeneracy = Degeneracy::None;
  bool m_clamped = false;

  bool degenerate() const { return degeneracy != Degeneracy::None; }
};

// --- Method 1: daily extreme temperatures ---

struct ExtremeEvent {
  Instant t;
  double temp_c = 0.0;
};

enum class ExtremeKind { DailyMax, DailyMin };

struct ExtremePair {
  Instant t_ext;
  double te_ext = 0.0;
  double th_resp = 0.0;
  ExtremeKind kind = ExtremeKind::DailyMax;
};

struct DailyExtremes {
  std::optional<ExtremeEvent> max_event;
  std::optional<ExtremeEvent> min_event;
};

namespace detail {

// Extremum over the closed local-time window [lo, hi]; absent unless the
// series covers the window on its own grid with no missing slot. Ties go to
// the earliest sample.
inline std::optional<ExtremeEvent> window_extremum(const TemperatureSeries& s, Instant lo,
                                                   Instant hi, bool want_max) {
  if (s.empty() || s.start() > lo || s.end() < hi) return std::nullopt;
  const std::int64_t step = std::int64_t(s.interval_min) * kSecPerMin;
  std::size_t i = s.lower_bound(lo);
  if (i >= s.size() || s.readings[i].t > hi || s.readings[i].t - lo >= step) return std::nullopt;
  std::optional<ExtremeEvent> best;
  std::size_t last = i;
  for (; i < s.size() && s.readings[i].t <= hi; ++i) {
    const Reading& r = s.readings[i];
    if (!best || (want_max ? r.temp_c > best->temp_c : r.temp_c < best->temp_c))
      best = ExtremeEvent{r.t, r.temp_c};
    last = i;
  }
  if (hi - s.readings[last].t >= step) return std::nullopt;
  if (!s.contiguous(s.lower_bound(lo), last)) return std::nullopt;
  return best;
}

}  // namespace detail

/// Daily environmental extremes in local time: the maximum over
/// [06:00, 18:00] of `day` and the minimum over [17:00 of `day`,
/// 17:00 of the next day]. Events are absent when the series does not fully
/// cover the window.
inline DailyExtremes daily_extremes(const TemperatureSeries& env, CivilDate day) {
  const int off = env.utc_offset_min;
  const CivilDate next = civil_from_days(days_from_civil(day.year, day.month, day.day) + 1);
  DailyExtremes out;
  out.max_event = detail::window_extremum(env, make_instant({day, 6, 0, 0}, off),
                                          make_instant({day, 18, 0, 0}, off), true);
  out.min_event = detail::window_extremum(env, make_instant({day, 17, 0, 0}, off),
                                          make_instant({next, 17, 0, 0}, off), false);
  return out;
}

namespace detail {

inline std::optional<double> try_response(const TemperatureSeries& hive, const ExtremeEvent& event,
                                          ExtremeKind kind) {
  const Instant lo = event.t;
  const Instant hi = event.t + kResponseWindowSec;
  std::size_t i = hive.lower_bound(lo);
  if (i < hive.size() && hive.readings[i].t == lo) ++i;  // window is open at the extreme itself
  std::optional<double> best;
  for (; i < hive.size() && hive.readings[i].t <= hi; ++i) {
    const double v = hive.readings[i].temp_c;
    if (!best || (kind == ExtremeKind::DailyMax ? v > *best : v < *best)) best = v;
  }
  return best;
}

}  // namespace detail

/// Hive response to an environmental extreme: the extremal hive temperature
/// within the two hours after the event (maximum after a daily maximum,
/// minimum after a daily minimum).
inline double response_after_extreme(const TemperatureSeries& hive, const ExtremeEvent& event,
                                     ExtremeKind kind) {
  const auto r = detail::try_response(hive, event, kind);
  if (!r) throw NoResponseSamples();
  return *r;
}

/// All usable extreme/response pairs of an aligned env-hive record, sorted by
/// event time. Spurious maxima are filtered per window in method1_estimate.
inline std::vector<ExtremePair> extract_pairs(const TemperatureSeries& env,
                                              const TemperatureSeries& hive) {
  std::vector<ExtremePair> pairs;
  if (env.empty()) return pairs;
  const int off = env.utc_offset_min;
  const std::int64_t first_day = days_from_civil(local_date(env.start(), off).year,
                                                 local_date(env.start(), off).month,
                                                 local_date(env.start(), off).day);
  const std::int64_t last_day = days_from_civil(local_date(env.end(), off).year,
                                                local_date(env.end(), off).month,
                                                local_date(env.end(), off).day);
  for (std::int64_t d = first_day; d <= last_day; ++d) {
    const DailyExtremes de = daily_extremes(env, civil_from_days(d));
    if (de.max_event) {
      if (const auto r = detail::try_response(hive, *de.max_event, ExtremeKind::DailyMax))
        pairs.push_back({de.max_event->t, de.max_event->temp_c, *r, ExtremeKind::DailyMax});
    }
    if (de.min_event) {
      if (const auto r = detail::try_response(hive, *de.min_event, ExtremeKind::DailyMin))
        pairs.push_back({de.min_event->t, de.min_event->temp_c, *r, ExtremeKind::DailyMin});
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const ExtremePair& a, const ExtremePair& b) { return a.t_ext < b.t_ext; });
  return pairs;
}

/// Joint ordinary-least-squares fit of th_resp on te_ext over the window's
/// max and min pairs; delta_t recovered from the fitted intercept. A daily
/// maximum lower than the window's highest daily minimum is not a genuine
/// warm extreme and is disregarded before the fit.
inline WindowEstimate method1_estimate(std::span<const ExtremePair> window_pairs, double t_d,
                                       Instant t_center = {}, std::size_t n_min = 4) {
  double highest_min = -1e9;
  bool any_min = false;
  for (const auto& p : window_pairs) {
    if (p.kind == ExtremeKind::DailyMin) {
      highest_min = std::max(highest_min, p.te_ext);
      any_min = true;
    }
  }
  std::vector<ExtremePair> pairs;
  pairs.reserve(window_pairs.size());
  for (const auto& p : window_pairs) {
    if (any_min && p.kind == ExtremeKind::DailyMax && p.te_ext < highest_min) continue;
    pairs.push_back(p);
  }
  if (pairs.size() < n_min) throw InsufficientPairs(pairs.size());

  WindowEstimate est;
  est.method = Method::Extremes;
  est.n = pairs.size();
  est.t_center = t_center;
  if (t_center == Instant{}) {
    Instant lo = pairs.front().t_ext, hi = pairs.front().t_ext;
    for (const auto& p : pairs) {
      lo = std::min(lo, p.t_ext);
      hi = std::max(hi, p.t_ext);
    }
    est.t_center = lo + (hi - lo) / 2;
  }

  const double n = double(pairs.size());
  double mx = 0, my = 0;
  for (const auto& p : pairs) {
    mx += p.te_ext;
    my += p.th_resp;
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (const auto& p : pairs) {
    sxx += (p.te_ext - mx) * (p.te_ext - mx);
    sxy += (p.te_ext - mx) * (p.th_resp - my);
  }
  if (sxx / n < kVarEpsilon) {
    est.degeneracy = Degeneracy::Invalid;
    return est;
  }
  const double m = sxy / sxx;
  const double b = my - m * mx;
  est.m = m;
  if (m < 0.0) {
    est.degeneracy = Degeneracy::Invalid;
    return est;
  }
  if (m <= kMFloor) {
    est.degeneracy = Degeneracy::Perfect;
    est.pi = kPiCap;
    return est;
  }
  const PiValue pv = pi_of_slope_checked(m);
  est.pi = pv.pi;
  est.m_clamped = pv.clamped;
  est.delta_t = (b - t_d * (1.0 - m)) / m;
  return est;
}

// --- Method 2: lagged cross-correlation ---

/// Candidate delays for the response of the hive to the environment.
struct LagGrid {
  std::vector<int> lags_min;

  static LagGrid regular(int interval_min, int max_lag_min = 240) {
    LagGrid g;
    for (int lag = 0; lag <= max_lag_min; lag += interval_min) g.lags_min.push_back(lag);
    return g;
  }
};

namespace detail {

struct PairedStats {
  std::size_t n = 0;
  double mean_x = 0, mean_y = 0;
  double var_x = 0, var_y = 0;  // population variance
  double rho = 0;
};

// Pair x(t) with y(t + tau) over all t where both exist; works across grid
// holes by matching timestamps.
inline PairedStats paired_stats(const TemperatureSeries& x, const TemperatureSeries& y,
                                std::int64_t tau_sec) {
  std::vector<double> xs, ys;
  xs.reserve(x.size());
  ys.reserve(x.size());
  for (const Reading& r : x.readings) {
    if (const auto j = y.index_of(r.t + tau_sec)) {
      xs.push_back(r.temp_c);
      ys.push_back(y.readings[*j].temp_c);
    }
  }
  PairedStats st;
  st.n = xs.size();
  if (st.n == 0) return st;
  const double n = double(st.n);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    st.mean_x += xs[i];
    st.mean_y += ys[i];
  }
  st.mean_x /= n;
  st.mean_y /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - st.mean_x;
    const double dy = ys[i] - st.mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  st.var_x = sxx / n;
  st.var_y = syy / n;
  if (st.var_x > kVarEpsilon && st.var_y > kVarEpsilon) st.rho = sxy / std::sqrt(sxx * syy);
  return st;
}

}  // namespace detail

/// Pearson correlation between x(t) and y(t + tau) over the shifted overlap.
inline double cross_correlation(const TemperatureSeries& x, const TemperatureSeries& y,
                                int tau_min, std::size_t min_overlap = 96) {
  if (tau_min < 0 || x.interval_min <= 0 || tau_min % x.interval_min != 0)
    throw std::invalid_argument("lag must be a non-negative multiple of the sampling interval");
  const auto st = detail::paired_stats(x, y, std::int64_t(tau_min) * kSecPerMin);
  if (st.n < min_overlap) throw InsufficientOverlap();
  if (st.var_x <= kVarEpsilon || st.var_y <= kVarEpsilon) throw ZeroVariance();
  return st.rho;
}

struct BestLag {
  int tau_min = 0;
  double rho = 0.0;
  bool degenerate = false;  // no lag with positive correlation
};

/// Grid lag maximising the cross-correlation; ties resolve to the smallest
/// lag. A non-positive maximum is flagged degenerate.
inline BestLag best_lag(const TemperatureSeries& x, const TemperatureSeries& y,
                        const LagGrid& grid, std::size_t min_overlap = 96) {
  if (grid.lags_min.empty()) throw std::invalid_argument("empty lag grid");
  std::optional<BestLag> best;
  bool any_overlap = false;
  for (const int tau : grid.lags_min) {
    double rho;
    try {
      rho = cross_correlation(x, y, tau, min_overlap);
    } catch (const InsufficientOverlap&) {
      continue;
    }
    any_overlap = true;
    if (!best || rho > best->rho) best = BestLag{tau, rho, false};
  }
  if (!any_overlap) throw InsufficientOverlap();
  best->degenerate = best->rho <= 0.0;
  return *best;
}

namespace detail {

// Shared tail of the cross-correlation estimator: turn the winning lag's
// shifted-overlap statistics into an estimate.
inline WindowEstimate estimate_from_lag_stats(int tau_min, double rho, const PairedStats& st,
                                              double t_d, Instant t_center) {
  WindowEstimate est;
  est.method = Method::CrossCorr;
  est.t_center = t_center;
  est.n = st.n;
  est.tau_star_min = tau_min;
  est.rho_star = rho;
  if (rho <= 0.0) {
    est.degeneracy = Degeneracy::Invalid;
    return est;
  }
  const double m = rho * std::sqrt(st.var_y / st.var_x);
  est.m = m;
  if (m <= kMFloor) {
    est.degeneracy = Degeneracy::Perfect;
    est.pi = kPiCap;
    return est;
  }
  const PiValue pv = pi_of_slope_checked(m);
  est.pi = pv.pi;
  est.m_clamped = pv.clamped;
  est.delta_t = delta_t_from_window(m, st.mean_y, st.mean_x, t_d);
  return est;
}

inline double population_variance(const TemperatureSeries& s) {
  double mean = 0;
  for (const Reading& r : s.readings) mean += r.temp_c;
  mean /= double(s.size());
  double ss = 0;
  for (const Reading& r : s.readings) ss += (r.temp_c - mean) * (r.temp_c - mean);
  return ss / double(s.size());
}

}  // namespace detail

/// Cross-correlation estimate over one aligned window: pick the best lag,
/// then m = rho* sigma_th / sigma_te and delta_t from the window means, all
/// on the lag-shifted overlap. A flat hive window is the degenerate-perfect
/// limit; a flat environment window carries no information.
inline WindowEstimate method2_estimate(const TemperatureSeries& env_window,
                                       const TemperatureSeries& hive_window, double t_d,
                                       const LagGrid& grid, std::size_t n_min = 96) {
  WindowEstimate est;
  est.method = Method::CrossCorr;
  est.n = env_window.size();
  if (!env_window.empty())
    est.t_center = env_window.start() + (env_window.end() - env_window.start()) / 2;
  if (env_window.size() < n_min || hive_window.size() < n_min) throw InsufficientOverlap();

  if (detail::population_variance(hive_window) <= kVarEpsilon) {
    est.degeneracy = Degeneracy::Perfect;
    est.m = 0.0;
    est.pi = kPiCap;
    return est;
  }
  if (detail::population_variance(env_window) <= kVarEpsilon) {
    est.degeneracy = Degeneracy::Invalid;
    return est;
  }

  const BestLag bl = best_lag(env_window, hive_window, grid, n_min);
  const auto st =
      detail::paired_stats(env_window, hive_window, std::int64_t(bl.tau_min) * kSecPerMin);
  return detail::estimate_from_lag_stats(bl.tau_min, bl.rho, st, t_d, est.t_center);
}

// --- rolling windows ---

struct EstimatorConfig {
  double t_d = 34.5;
  int window_days = 7;
  int step_min = 0;  // 0: sampling interval for crosscorr, 12 h for extremes
  int max_lag_min = 240;
  std::size_t n_min_pairs = 4;
  std::size_t n_min_samples = 96;
  int max_gap_min = 60;
};

struct SkipStats {
  std::size_t gap = 0;                 // window crosses an alignment split
  std::size_t insufficient_pairs = 0;  // too few extreme pairs
  std::size_t insufficient_samples = 0;

  std::size_t total() const { return gap + insufficient_pairs + insufficient_samples; }
};

namespace detail {

inline std::vector<WindowEstimate> rolling_extremes(const TemperatureSeries& env,
                                                    const TemperatureSeries& hive,
                                                    const EstimatorConfig& cfg, SkipStats* skips) {
  std::vector<WindowEstimate> out;
  const std::vector<ExtremePair> pairs = extract_pairs(env, hive);
  const std::int64_t window = std::int64_t(cfg.window_days) * kSecPerDay;
  const std::int64_t step = std::int64_t(cfg.step_min > 0 ? cfg.step_min : 720) * kSecPerMin;
  const Instant first = env.start();
  const Instant last = env.end();
  for (Instant t0 = first; t0 + window <= last + std::int64_t(env.interval_min) * kSecPerMin;
       t0 = t0 + step) {
    auto lo = std::lower_bound(pairs.begin(), pairs.end(), t0,
                               [](const ExtremePair& p, Instant v) { return p.t_ext < v; });
    auto hi = std::lower_bound(pairs.begin(), pairs.end(), t0 + window,
                               [](const ExtremePair& p, Instant v) { return p.t_ext < v; });
    try {
      const std::span<const ExtremePair> in_window(pairs.data() + (lo - pairs.begin()),
                                                   std::size_t(hi - lo));
      out.push_back(method1_estimate(in_window, cfg.t_d, t0 + window / 2, cfg.n_min_pairs));
    } catch (const InsufficientPairs&) {
      if (skips) ++skips->insufficient_pairs;
    }
  }
  return out;
}

// Rolling cross-correlation over prefix sums: O(1) per (window, lag) after an
// O(n * lags) setup. Only contiguous windows are evaluated, so index shifts
// equal time shifts and the prefix differences are exact window statistics.
inline std::vector<WindowEstimate> rolling_crosscorr(const TemperatureSeries& env,
                                                     const TemperatureSeries& hive,
                                                     const EstimatorConfig& cfg,
                                                     SkipStats* skips) {
  std::vector<WindowEstimate> out;
  const std::size_t n = env.size();
  const int interval = env.interval_min;
  const std::int64_t step_sec = std::int64_t(interval) * kSecPerMin;
  const std::int64_t window_sec = std::int64_t(cfg.window_days) * kSecPerDay;
  if (window_sec % step_sec != 0)
    throw std::invalid_argument("window must be a multiple of the sampling interval");
  const std::size_t W = std::size_t(window_sec / step_sec);
  if (W < 2 || W > n) return out;

  const int step_min = cfg.step_min > 0 ? cfg.step_min : interval;
  if (step_min % interval != 0)
    throw std::invalid_argument("step must be a multiple of the sampling interval");
  const std::size_t step_idx = std::size_t(step_min / interval);

  const int max_k = cfg.max_lag_min / interval;

  // Shift by the first value of each series to keep the squared sums small.
  const double ref_e = env.readings.front().temp_c;
  const double ref_h = hive.readings.front().temp_c;

  std::vector<double> pe(n + 1, 0), pe2(n + 1, 0), ph(n + 1, 0), ph2(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = env.readings[i].temp_c - ref_e;
    const double h = hive.readings[i].temp_c - ref_h;
    pe[i + 1] = pe[i] + e;
    pe2[i + 1] = pe2[i] + e * e;
    ph[i + 1] = ph[i] + h;
    ph2[i + 1] = ph2[i] + h * h;
  }
  std::vector<std::vector<double>> peh(std::size_t(max_k) + 1);
  for (int k = 0; k <= max_k; ++k) {
    auto& p = peh[std::size_t(k)];
    p.assign(n + 1 - std::min<std::size_t>(std::size_t(k), n), 0.0);
    for (std::size_t j = 0; j + std::size_t(k) < n; ++j)
      p[j + 1] = p[j] + (env.readings[j].temp_c - ref_e) *
                            (hive.readings[j + std::size_t(k)].temp_c - ref_h);
  }

  // next_gap[i]: first boundary j >= i where the grid is broken, n-1 if none.
  std::vector<std::size_t> next_gap(n, n - 1);
  for (std::size_t j = n - 1; j-- > 0;) {
    const bool broken = (env.readings[j + 1].t - env.readings[j].t) != step_sec;
    next_gap[j] = broken ? j : next_gap[j + 1];
  }

  auto range_sum = [](const std::vector<double>& p, std::size_t a, std::size_t b) {
    return p[b] - p[a];
  };

  for (std::size_t a = 0; a + W <= n; a += step_idx) {
    if (W >= 2 && next_gap[a] < a + W - 1) {
      if (skips) ++skips->gap;
      continue;
    }
    const Instant t_center = env.readings[a].t + window_sec / 2;

    if (range_sum(ph2, a, a + W) - range_sum(ph, a, a + W) * range_sum(ph, a, a + W) / double(W) <=
        kVarEpsilon * double(W)) {
      WindowEstimate est;
      est.method = Method::CrossCorr;
      est.t_center = t_center;
      est.n = W;
      est.degeneracy = Degeneracy::Perfect;
      est.m = 0.0;
      est.pi = kPiCap;
      out.push_back(est);
      continue;
    }
    if (range_sum(pe2, a, a + W) - range_sum(pe, a, a + W) * range_sum(pe, a, a + W) / double(W) <=
        kVarEpsilon * double(W)) {
      WindowEstimate est;
      est.method = Method::CrossCorr;
      est.t_center = t_center;
      est.n = W;
      est.degeneracy = Degeneracy::Invalid;
      out.push_back(est);
      continue;
    }

    std::optional<int> best_k;
    double best_rho = 0;
    detail::PairedStats best_st;
    for (int k = 0; k <= max_k; ++k) {
      if (std::size_t(k) >= W) break;
      const std::size_t nk = W - std::size_t(k);
      if (nk < cfg.n_min_samples) break;
      const double cnt = double(nk);
      const double sx = range_sum(pe, a, a + W - std::size_t(k));
      const double sy = range_sum(ph, a + std::size_t(k), a + W);
      const double sxx = range_sum(pe2, a, a + W - std::size_t(k));
      const double syy = range_sum(ph2, a + std::size_t(k), a + W);
      const double sxy = range_sum(peh[std::size_t(k)], a, a + W - std::size_t(k));
      const double vx = sxx - sx * sx / cnt;
      const double vy = syy - sy * sy / cnt;
      if (vx <= kVarEpsilon * cnt || vy <= kVarEpsilon * cnt) continue;
      const double rho = (sxy - sx * sy / cnt) / std::sqrt(vx * vy);
      if (!best_k || rho > best_rho) {
        best_k = k;
        best_rho = rho;
        best_st.n = nk;
        best_st.mean_x = sx / cnt + ref_e;
        best_st.mean_y = sy / cnt + ref_h;
        best_st.var_x = vx / cnt;
        best_st.var_y = vy / cnt;
        best_st.rho = rho;
      }
    }
    if (!best_k) {
      if (skips) ++skips->insufficient_samples;
      continue;
    }
    out.push_back(detail::estimate_from_lag_stats(*best_k * interval, best_rho, best_st, cfg.t_d,
                                                  t_center));
  }
  return out;
}

}  // namespace detail

/// Rolling-window estimates for one hive of a dataset. The env and hive
/// records are aligned first; windows that cross an alignment split or fail
/// the method's sample minimum are skipped and counted in `skips`.
inline std::vector<WindowEstimate> rolling_estimates(const HiveDataset& ds,
                                                     const std::string& hive_id, Method method,
                                                     const EstimatorConfig& cfg = {},
                                                     SkipStats* skips = nullptr) {
  const auto it = ds.hives.find(hive_id);
  if (it == ds.hives.end()) throw Error("unknown hive id " + hive_id);
  const auto [env, hive] = align(ds.env, it->second, cfg.max_gap_min);
  if (method == Method::Extremes) return detail::rolling_extremes(env, hive, cfg, skips);
  return detail::rolling_crosscorr(env, hive, cfg, skips);
}

/// Desired-temperature calibration: mean hive temperature over a declared
/// healthy reference period.
inline double calibrate_t_d(const TemperatureSeries& hive, Instant from, Instant to) {
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = hive.lower_bound(from); i < hive.size() && hive.readings[i].t <= to; ++i) {
    sum += hive.readings[i].temp_c;
    ++n;
  }
  if (n == 0) throw Error("no hive samples in the calibration period");
  return sum / double(n);
}

// --- estimate file formats ---

inline constexpr const char* kEstimateCsvHeader =
    "t_center,method,m,pi,delta_t,tau_star_min,rho_star,n,degenerate";

inline void write_estimates_csv(std::ostream& out, const std::vector<WindowEstimate>& estimates,
                                int utc_offset_min) {
  out << kEstimateCsvHeader << '\n';
  for (const WindowEstimate& e : estimates) {
    out << format_iso8601(e.t_center, utc_offset_min) << ',' << to_string(e.method) << ','
        << detail::opt_fixed6(e.m) << ',' << detail::opt_fixed6(e.pi) << ','
        << detail::opt_fixed6(e.delta_t) << ','
        << (e.tau_star_min ? std::to_string(*e.tau_star_min) : std::string()) << ','
        << detail::opt_fixed6(e.rho_star) << ',' << e.n << ',' << (e.degenerate() ? 1 : 0)
        << '\n';
  }
}

inline void write_estimates_jsonl(std::ostream& out, const std::vector<WindowEstimate>& estimates,
                                  int utc_offset_min) {
  for (const WindowEstimate& e : estimates) {
    nlohmann::json j;
    j["t_center"] = format_iso8601(e.t_center, utc_offset_min);
    j["method"] = to_string(e.method);
    j["m"] = e.m ? nlohmann::json(*e.m) : nlohmann::json();
    j["pi"] = e.pi ? nlohmann::json(*e.pi) : nlohmann::json();
    j["delta_t"] = e.delta_t ? nlohmann::json(*e.delta_t) : nlohmann::json();
    j["tau_star_min"] = e.tau_star_min ? nlohmann::json(*e.tau_star_min) : nlohmann::json();
    j["rho_star"] = e.rho_star ? nlohmann::json(*e.rho_star) : nlohmann::json();
    j["n"] = e.n;
    j["degenerate"] = e.degenerate();
    out << j.dump() << '\n';
  }
}

namespace detail {

inline Degeneracy degeneracy_of(bool flag, bool has_pi) {
  if (!flag) return Degeneracy::None;
  return has_pi ? Degeneracy::Perfect : Degeneracy::Invalid;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

inline std::vector<WindowEstimate> read_estimates_csv(std::istream& in) {
  std::vector<WindowEstimate> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view sv = detail::trim_cr(line);
    if (sv.empty()) continue;
    if (lineno == 1) {
      if (sv != kEstimateCsvHeader) throw MalformedRow(1, "unexpected estimate header");
      continue;
    }
    const auto f = detail::split_csv(sv);
    if (f.size() != 9) throw MalformedRow(lineno, "expected 9 fields");
    const auto ts = parse_iso8601(f[0]);
    const auto method = method_from_string(f[1]);
    if (!ts || !method) throw MalformedRow(lineno, "bad t_center or method");
    WindowEstimate e;
    e.t_center = ts->t;
    e.method = *method;
    auto opt = [&](std::string_view s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      const auto v = detail::parse_double(s);
      if (!v) throw MalformedRow(lineno, "bad number");
      return v;
    };
    e.m = opt(f[2]);
    e.pi = opt(f[3]);
    e.delta_t = opt(f[4]);
    if (!f[5].empty()) e.tau_star_min = int(*opt(f[5]));
    e.rho_star = opt(f[6]);
    e.n = std::size_t(*opt(f[7]));
    e.degeneracy = detail::degeneracy_of(*opt(f[8]) != 0.0, e.pi.has_value());
    out.push_back(e);
  }
  return out;
}

inline std::vector<WindowEstimate> read_estimates_jsonl(std::istream& in) {
  std::vector<WindowEstimate> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    WindowEstimate e;
    const auto ts = parse_iso8601(j.at("t_center").get<std::string>());
    const auto method = method_from_string(j.at("method").get<std::string>());
    if (!ts || !method) throw Error("bad estimate record: " + line);
    e.t_center = ts->t;
    e.method = *method;
    auto opt = [&j](const char* key) -> std::optional<double> {
      const auto& v = j.at(key);
      if (v.is_null()) return std::nullopt;
      return v.get<double>();
    };
    e.m = opt("m");
    e.pi = opt("pi");
    e.delta_t = opt("delta_t");
    if (const auto v = opt("tau_star_min")) e.tau_star_min = int(*v);
    e.rho_star = opt("rho_star");
    e.n = j.at("n").get<std::size_t>();
    e.degeneracy = detail::degeneracy_of(j.at("degenerate").get<bool>(), e.pi.has_value());
    out.push_back(e);
  }
  return out;
}

}  // namespace hivemon
