// Acceptance suite: one criterion per section, one printed line per
// criterion, non-zero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hivemon/classify.hpp"
#include "hivemon/collapse_stats.hpp"
#include "hivemon/estimators.hpp"
#include "hivemon/gridmap.hpp"
#include "hivemon/ingest.hpp"
#include "hivemon/synth.hpp"

using namespace hivemon;

namespace {

struct Check {
  std::vector<std::string> failures;
  std::string note;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TemperatureSeries series_from(const std::vector<double>& temps, Instant start, int interval_min,
                              SensorKind kind) {
  TemperatureSeries s;
  s.sensor_id = "s";
  s.kind = kind;
  s.interval_min = interval_min;
  s.utc_offset_min = 600;
  for (std::size_t i = 0; i < temps.size(); ++i)
    s.readings.push_back({start + std::int64_t(i) * interval_min * kSecPerMin, temps[i]});
  return s;
}

// --- 1: slope identity against a brute-force least-squares oracle ---

void criterion_slope_identity(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20250101);
  std::uniform_int_distribution<int> len(50, 5000);
  std::uniform_real_distribution<double> amp(0.2, 12.0), slope(-3.0, 3.0), freq(0.005, 0.6);
  std::normal_distribution<double> noise(0.0, 1.0);
  const Instant start{0};

  double max_dev = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = std::size_t(len(rng));
    const double a = amp(rng), b = slope(rng), w = freq(rng);
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = 20.0 + a * std::sin(w * double(i)) + noise(rng);
      ys[i] = 30.0 + b * xs[i] + noise(rng);
    }
    const auto st =
        detail::paired_stats(series_from(xs, start, 15, SensorKind::Environment),
                             series_from(ys, start, 15, SensorKind::Hive), 0);
    const double via_rho = st.rho * std::sqrt(st.var_y / st.var_x);

    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= n;
    my /= n;
    long double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    const double ols = double(sxy / sxx);
    max_dev = std::max(max_dev, std::abs(via_rho - ols));
  }
  const double elapsed = seconds_since(t0);
  c.require(max_dev <= 1e-9, "max deviation " + std::to_string(max_dev) + " > 1e-9");
  c.require(elapsed < 5.0, "runtime " + std::to_string(elapsed) + " s >= 5 s");
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max |dev| %.2e over 1000 pairs, %.2f s", max_dev, elapsed);
  c.note = buf;
}

// --- 2: the natural-log reading of pi is the self-consistent one ---

void criterion_log_base(Check& c) {
  const double natural = std::exp(-2.66) * 42.0;
  const double base10 = std::pow(10.0, -2.66) * 42.0;
  c.require(natural >= 2.9 && natural <= 3.0,
            "e^-2.66 * 42 = " + std::to_string(natural) + " outside [2.9, 3.0]");
  c.require(!(base10 >= 2.9 && base10 <= 3.0),
            "10^-2.66 * 42 = " + std::to_string(base10) + " would also pass; guard broken");
  char buf[96];
  std::snprintf(buf, sizeof(buf), "e: %.4f C in [2.9, 3.0]; base-10: %.4f C rejected", natural,
                base10);
  c.note = buf;
}

// --- shared synthetic builders ---

HiveDataset constant_dataset(double m, double dt, int tau_min, double noise, double quant,
                             int span_days, std::uint64_t seed) {
  EnvModel em;
  em.span_days = span_days;
  em.noise_sigma_c = noise;
  em.quantization_c = quant;
  em.seed = seed;
  HiveScenario hs;
  hs.track = {{0.0, m, dt}};
  hs.tau_min = tau_min;
  hs.noise_sigma_c = noise;
  hs.quantization_c = quant;
  hs.seed = seed + 1000;
  HiveDataset ds;
  ds.env = gen_env(em);
  ds.hives.emplace("h", gen_hive(ds.env, hs));
  ds.hemisphere = Hemisphere::South;
  ds.label = "acceptance";
  return ds;
}

// --- 3: cross-correlation method recovery ---

void criterion_method2_recovery(Check& c) {
  {
    const auto ds = constant_dataset(0.3, 8.0, 60, 0.0, 0.0, 30, 1);
    const auto est = rolling_estimates(ds, "h", Method::CrossCorr);
    c.require(!est.empty(), "noiseless run produced no estimates");
    for (const auto& e : est) {
      if (e.degenerate()) {
        c.require(false, "degenerate estimate in noiseless run");
        break;
      }
      if (*e.tau_star_min != 60) {
        c.require(false, "tau* " + std::to_string(*e.tau_star_min) + " != 60");
        break;
      }
      if (std::abs(*e.m - 0.3) > 0.003) {
        c.require(false, "noiseless |m - 0.3| = " + std::to_string(std::abs(*e.m - 0.3)));
        break;
      }
      if (std::abs(*e.delta_t - 8.0) > 0.1) {
        c.require(false, "noiseless |dt - 8| = " + std::to_string(std::abs(*e.delta_t - 8.0)));
        break;
      }
    }
  }
  double worst_m = 0.0, worst_dt = 0.0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const auto ds = constant_dataset(0.3, 8.0, 60, 0.1, kLoggerResolutionC, 30, seed);
    const auto est = rolling_estimates(ds, "h", Method::CrossCorr);
    c.require(!est.empty(), "noisy run produced no estimates");
    for (const auto& e : est) {
      if (e.degenerate()) continue;
      worst_m = std::max(worst_m, std::abs(*e.m - 0.3));
      worst_dt = std::max(worst_dt, std::abs(*e.delta_t - 8.0));
    }
  }
  c.require(worst_m <= 0.015, "noisy worst |m - 0.3| = " + std::to_string(worst_m) + " > 0.015");
  c.require(worst_dt <= 0.5, "noisy worst |dt - 8| = " + std::to_string(worst_dt) + " > 0.5");
  char buf[96];
  std::snprintf(buf, sizeof(buf), "noisy worst |m-0.3| %.4f, |dt-8| %.3f over 20 seeds", worst_m,
                worst_dt);
  c.note = buf;
}

// --- 4: daily-extremes method recovery ---

void criterion_method1_recovery(Check& c) {
  {
    const auto ds = constant_dataset(0.3, 8.0, 60, 0.0, 0.0, 30, 2);
    const auto est = rolling_estimates(ds, "h", Method::Extremes);
    c.require(!est.empty(), "noiseless run produced no estimates");
    double worst_m = 0.0, worst_dt = 0.0;
    for (const auto& e : est) {
      if (e.degenerate()) {
        c.require(false, "degenerate estimate in noiseless run");
        break;
      }
      worst_m = std::max(worst_m, std::abs(*e.m - 0.3));
      worst_dt = std::max(worst_dt, std::abs(*e.delta_t - 8.0));
    }
    c.require(worst_m <= 1e-6, "noiseless worst |m - 0.3| = " + std::to_string(worst_m));
    c.require(worst_dt <= 1e-3, "noiseless worst |dt - 8| = " + std::to_string(worst_dt));
  }
  double worst_rel = 0.0;
  for (std::uint64_t seed = 200; seed < 220; ++seed) {
    const auto ds = constant_dataset(0.3, 8.0, 60, 0.1, kLoggerResolutionC, 30, seed);
    const auto est = rolling_estimates(ds, "h", Method::Extremes);
    c.require(!est.empty(), "noisy run produced no estimates");
    for (const auto& e : est) {
      if (e.degenerate()) continue;
      worst_rel = std::max(worst_rel, std::abs(*e.m - 0.3) / 0.3);
    }
  }
  c.require(worst_rel <= 0.10,
            "noisy worst relative slope error " + std::to_string(worst_rel) + " > 10%");
  char buf[96];
  std::snprintf(buf, sizeof(buf), "noisy worst relative |m| error %.2f%% over 20 seeds",
                100.0 * worst_rel);
  c.note = buf;
}

// --- 5: the two methods agree on noisy constant-model data ---

void criterion_method_agreement(Check& c) {
  const auto ds = constant_dataset(0.3, 8.0, 60, 0.1, kLoggerResolutionC, 30, 33);
  const auto m1 = rolling_estimates(ds, "h", Method::Extremes);
  const auto m2 = rolling_estimates(ds, "h", Method::CrossCorr);
  c.require(!m1.empty() && !m2.empty(), "missing estimates");

  std::size_t matched = 0;
  double worst = 0.0;
  std::size_t j = 0;
  for (const auto& e1 : m1) {
    if (e1.degenerate()) continue;
    while (j < m2.size() && m2[j].t_center < e1.t_center) ++j;
    if (j >= m2.size()) break;
    if (m2[j].t_center != e1.t_center || m2[j].degenerate()) continue;
    worst = std::max(worst, std::abs(*e1.pi - *m2[j].pi));
    ++matched;
  }
  c.require(matched >= 40, "only " + std::to_string(matched) + " matched window centers");
  c.require(worst <= 0.15, "worst |pi_1 - pi_2| = " + std::to_string(worst) + " > 0.15");
  char buf[96];
  std::snprintf(buf, sizeof(buf), "worst |pi gap| %.3f over %zu matched windows", worst, matched);
  c.note = buf;
}

// --- 6: degradation scenario end to end ---

void criterion_degradation(Check& c) {
  DegradationConfig cfg;  // m: 0.05 -> 1.0 over 30 days after an 8 day lead
  const auto synth = degradation_scenario(cfg);
  StatusThresholds th;
  th.warn_combinator = WarnCombinator::All;  // conjunctive warning rule

  const auto degrading = rolling_estimates(synth.dataset, "degrading", Method::CrossCorr);
  const auto tl = build_timeline("degrading", degrading, synth.dataset.hemisphere,
                                 synth.dataset.utc_offset_min(), th);
  c.require(!tl.points.empty(), "no points for the degrading hive");
  if (!tl.points.empty())
    c.require(tl.points.front().status == Status::Stable, "first status is not Stable");
  c.require(tl.collapse_onset.has_value(), "no confirmed collapse onset");
  c.require(!tl.episodes.empty(), "no warning episode");
  if (tl.collapse_onset) {
    if (!tl.episodes.empty())
      c.require(tl.episodes.front().end < *tl.collapse_onset,
                "warning episode does not precede the onset");
    bool stable_before_warning = false;
    Instant first_warning{};
    for (const auto& p : tl.points) {
      if (p.status == Status::Warning) {
        first_warning = p.t;
        break;
      }
    }
    for (const auto& p : tl.points) {
      if (p.t >= first_warning) break;
      if (p.status == Status::Stable) stable_before_warning = true;
    }
    c.require(stable_before_warning, "no Stable phase before the first Warning");
    for (const auto& p : tl.points)
      if (p.t >= *tl.collapse_onset && p.status != Status::Collapsed) {
        c.require(false, "non-Collapsed point after the onset");
        break;
      }
  }

  const auto healthy = rolling_estimates(synth.dataset, "healthy", Method::CrossCorr);
  const auto tl_h = build_timeline("healthy", healthy, synth.dataset.hemisphere,
                                   synth.dataset.utc_offset_min(), th);
  std::size_t warnings = 0;
  bool any_collapse = false;
  for (const auto& p : tl_h.points) {
    warnings += p.status == Status::Warning;
    any_collapse |= p.status == Status::Collapsed;
  }
  c.require(!any_collapse, "healthy control has a Collapsed point");
  c.require(!tl_h.collapse_onset.has_value(), "healthy control has a confirmed onset");
  c.require(!tl_h.points.empty() && double(warnings) < 0.01 * double(tl_h.points.size()),
            "healthy control warning fraction >= 1%");
  char buf[128];
  std::snprintf(buf, sizeof(buf), "onset day %.1f, %zu warning episodes, healthy warnings %zu/%zu",
                tl.collapse_onset ? days_between(synth.dataset.env.start(), *tl.collapse_onset)
                                  : -1.0,
                tl.episodes.size(), warnings, tl_h.points.size());
  c.note = buf;
}

// --- 7: limit cases of the linear model ---

void criterion_limits(Check& c) {
  EnvModel em;
  em.span_days = 10;
  em.noise_sigma_c = 0.1;
  em.seed = 9;
  HiveDataset ds;
  ds.env = gen_env(em);
  TemperatureSeries mirror = ds.env;
  mirror.kind = SensorKind::Hive;
  mirror.sensor_id = "mirror";
  ds.hives.emplace("mirror", mirror);
  ds.hemisphere = Hemisphere::South;

  const auto est = rolling_estimates(ds, "mirror", Method::CrossCorr);
  c.require(!est.empty(), "no estimates for the mirrored hive");
  for (const auto& e : est) {
    if (e.degenerate() || *e.tau_star_min != 0 || std::abs(*e.m - 1.0) > 1e-12 ||
        std::abs(*e.pi) > 1e-12 || std::abs(*e.delta_t) > 1e-9) {
      c.require(false, "mirrored hive did not read (m, pi, dt) = (1, 0, 0) at tau 0");
      break;
    }
  }

  HiveDataset ds2;
  ds2.env = ds.env;
  ds2.hives.emplace("flat",
                    series_from(std::vector<double>(ds.env.size(), 34.5), ds.env.start(), 15,
                                SensorKind::Hive));
  ds2.hemisphere = Hemisphere::South;
  for (const Method m : {Method::CrossCorr, Method::Extremes}) {
    const auto flat_est = rolling_estimates(ds2, "flat", m);
    c.require(!flat_est.empty(), "no estimates for the flat hive");
    for (const auto& e : flat_est) {
      if (e.degeneracy != Degeneracy::Perfect || *e.pi != kPiCap) {
        c.require(false, "flat hive is not degenerate-perfect");
        break;
      }
      if (classify_point(e, Season::Summer, StatusThresholds{}) != Status::Stable) {
        c.require(false, "flat hive does not classify Stable");
        break;
      }
    }
  }
  c.note = "mirror: (1, 0, 0) at tau 0; flat hive: perfect, Stable";
}

// --- 8: collapse statistics ---

void criterion_collapse_stats(Check& c) {
  const auto edges = default_increment_edges();

  EnvModel em;
  em.span_days = 30;
  em.noise_sigma_c = 0.1;
  em.seed = 77;
  const auto env = gen_env(em);

  {
    TemperatureSeries hive = env;
    hive.kind = SensorKind::Hive;
    for (auto& r : hive.readings) r.temp_c += 5.0;
    const auto inc_e = std_increments(rolling_mean_std(env, 4));
    const auto inc_h = std_increments(rolling_mean_std(hive, 4));
    const double err = divergence_error(increment_pdf(inc_e, edges), increment_pdf(inc_h, edges));
    c.require(err == 0.0, "offset hive error " + std::to_string(err) + " != 0");
  }
  double noise_err = 0.0;
  {
    std::mt19937_64 rng(4242);
    std::normal_distribution<double> dist(34.5, 5.0);
    std::vector<double> temps(env.size());
    for (auto& v : temps) v = dist(rng);
    const auto hive = series_from(temps, env.start(), 15, SensorKind::Hive);
    const auto inc_e = std_increments(rolling_mean_std(env, 4));
    const auto inc_h = std_increments(rolling_mean_std(hive, 4));
    noise_err = divergence_error(increment_pdf(inc_e, edges), increment_pdf(inc_h, edges));
    c.require(noise_err > 0.5,
              "independent-noise error " + std::to_string(noise_err) + " <= 0.5");
  }

  DegradationConfig cfg;  // record ends with the drift; no tail
  const auto synth = degradation_scenario(cfg);
  const auto [env_a, hive_a] = align(synth.dataset.env, synth.dataset.hives.at("degrading"));
  const auto r = collapse_onset_statistical(env_a, hive_a);
  c.require(r.onset.has_value(), "no statistical onset on the degradation scenario");
  c.require(r.error_curve.size() > 10, "error curve too short");
  if (r.onset && r.error_curve.size() > 10) {
    double prev = -1.0;
    bool monotone = true;
    for (const auto& p : r.error_curve) {
      if (p.t < *r.onset) continue;
      if (prev >= 0.0 && p.mean < prev - 1e-9) monotone = false;
      prev = p.mean;
    }
    c.require(monotone, "Error(t) decreases after the onset");
    const double plateau = r.error_curve.back().mean;
    c.require(plateau > 0.0, "plateau value is zero");
    const std::size_t n = r.error_curve.size();
    for (std::size_t i = n - 3; i < n; ++i) {
      const double diff = std::abs(r.error_curve[i].mean - r.error_curve[i - 1].mean);
      c.require(diff < 0.05 * plateau, "late successive difference " + std::to_string(diff) +
                                           " >= 5% of plateau " + std::to_string(plateau));
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "noise err %.2f, plateau %.2f, onset day %.1f", noise_err,
                  plateau, days_between(env_a.start(), *r.onset));
    c.note = buf;
  }
}

// --- 9: grid conservation ---

void criterion_grid(Check& c) {
  std::mt19937_64 rng(555);
  std::uniform_real_distribution<double> upi(-2.0, 9.0), udt(-10.0, 26.0);
  std::uniform_int_distribution<int> usea(0, 3), ulab(0, 1);
  std::map<std::string, Instant> onsets{{"bad", Instant{1000000}}};
  std::vector<LabeledPoint> pts;
  for (int i = 0; i < 5000; ++i) {
    LabeledPoint p;
    const bool collapsed = ulab(rng) == 1;
    p.hive_id = collapsed ? "bad" : "good";
    p.label = collapsed ? HiveClass::EventuallyCollapsed : HiveClass::Healthy;
    p.pi = upi(rng);
    p.delta_t = udt(rng);
    p.season = Season(usea(rng));
    p.t_center = Instant{std::int64_t(i) * 900};
    pts.push_back(p);
  }
  const auto g = accumulate(pts, onsets);
  std::size_t in_cells = 0;
  bool props_ok = true, seasons_ok = true;
  for (const auto& cell : g.cells) {
    in_cells += cell.n_total;
    props_ok &= cell.prop_collapsed >= 0.0 && cell.prop_collapsed <= 1.0;
    std::size_t season_total = 0;
    for (const auto n : cell.season_counts) season_total += n;
    seasons_ok &= season_total == cell.n_total;
    seasons_ok &= cell.dominant_season_freq > 0.0 && cell.dominant_season_freq <= 1.0;
  }
  c.require(in_cells + g.clamped == pts.size(),
            "cells + clamped = " + std::to_string(in_cells + g.clamped) + " != " +
                std::to_string(pts.size()));
  c.require(g.clamped > 0, "test input produced no clamped points");
  c.require(props_ok, "a proportion left [0, 1]");
  c.require(seasons_ok, "season frequencies do not sum to one");
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%zu in cells + %zu clamped = %zu points", in_cells, g.clamped,
                pts.size());
  c.note = buf;
}

// --- 10: throughput and determinism ---

void criterion_performance(Check& c) {
  EnvModel em;
  em.span_days = 60;
  em.noise_sigma_c = 0.1;
  em.seed = 7000;
  HiveDataset ds;
  ds.env = gen_env(em);
  ds.hemisphere = Hemisphere::South;
  ds.label = "bench";
  std::size_t readings = 0;
  for (int i = 0; i < 16; ++i) {
    HiveScenario hs;
    hs.track = {{0.0, 0.1 + 0.05 * i, 4.0 + 0.5 * i}};
    hs.tau_min = 30 + 15 * (i % 5);
    hs.noise_sigma_c = 0.1;
    hs.seed = 8000 + std::uint64_t(i);
    char name[16];
    std::snprintf(name, sizeof(name), "hive%02d", i);
    hs.sensor_id = name;
    ds.hives.emplace(name, gen_hive(ds.env, hs));
    readings += ds.hives.at(name).size();
  }
  c.require(readings > 90000, "dataset smaller than intended");

  auto analyse_all = [&ds]() {
    std::ostringstream bytes;
    for (const auto& [id, _] : ds.hives) {
      for (const Method m : {Method::Extremes, Method::CrossCorr}) {
        const auto est = rolling_estimates(ds, id, m);
        write_estimates_csv(bytes, est, ds.utc_offset_min());
      }
    }
    return bytes.str();
  };

  const auto t0 = std::chrono::steady_clock::now();
  const std::string first = analyse_all();
  const double elapsed = seconds_since(t0);
  c.require(elapsed < 10.0, "two-method analysis took " + std::to_string(elapsed) + " s >= 10 s");
  c.require(!first.empty(), "analysis produced no output");

  const std::string second = analyse_all();
  c.require(first == second, "rerun produced different bytes");
  char buf[96];
  std::snprintf(buf, sizeof(buf), "16 hives x 60 d (%zu readings) in %.2f s, rerun identical",
                readings, elapsed);
  c.note = buf;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "slope identity vs least-squares oracle", criterion_slope_identity},
      {2, "natural-log threshold self-consistency", criterion_log_base},
      {3, "cross-correlation method recovery", criterion_method2_recovery},
      {4, "daily-extremes method recovery", criterion_method1_recovery},
      {5, "method agreement on noisy data", criterion_method_agreement},
      {6, "degradation timeline end to end", criterion_degradation},
      {7, "model limit cases", criterion_limits},
      {8, "collapse statistics and error plateau", criterion_collapse_stats},
      {9, "grid conservation", criterion_grid},
      {10, "throughput and determinism", criterion_performance},
  };

  std::printf("hivemon acceptance suite\n");
  int failed = 0;
  for (const auto& criterion : criteria) {
    Check c;
    try {
      criterion.run(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    if (c.failures.empty()) {
      std::printf("[PASS] %2d. %s%s%s\n", criterion.id, criterion.name,
                  c.note.empty() ? "" : " -- ", c.note.c_str());
    } else {
      ++failed;
      std::printf("[FAIL] %2d. %s -- %s\n", criterion.id, criterion.name,
                  c.failures.front().c_str());
    }
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
