#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hivemon/errors.hpp"
#include "hivemon/estimators.hpp"
#include "hivemon/ingest.hpp"
#include "hivemon/timeutil.hpp"

namespace hivemon {

/// Sensor quantisation step of the reference loggers.
inline constexpr double kLoggerResolutionC = 0.0625;

namespace detail {

// Box-Muller gaussian over mt19937_64 so that generated series are
// bit-identical across standard libraries for a given seed.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : eng_(seed) {}

  double next(double sigma) {
    if (sigma <= 0.0) return 0.0;
    if (have_spare_) {
      have_spare_ = false;
      return spare_ * sigma;
    }
    double u1 = 0.0;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta) * sigma;
  }

 private:
  double uniform01() {
    return double(eng_() >> 11) * 0x1.0p-53;  // [0, 1)
  }

  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline double quantize(double v, double resolution) {
  if (resolution <= 0.0) return v;
  return std::round(v / resolution) * resolution;
}

}  // namespace detail

/// Synthetic environmental temperature: a daily and a seasonal sinusoid
/// around a mean, plus seeded gaussian sensor noise, quantised to the logger
/// resolution.
struct EnvModel {
  double mean_c = 22.0;
  double daily_amp_c = 8.0;
  double seasonal_amp_c = 0.0;
  double noise_sigma_c = 0.0;
  double phase_hours = 8.0;  // daily peak at phase + 6 h local
  int span_days = 30;
  int interval_min = 15;
  std::uint64_t seed = 1;
  double quantization_c = kLoggerResolutionC;  // 0 disables
  Instant start = make_instant({{2020, 1, 22}, 0, 0, 0}, 600);
  int utc_offset_min = 600;
  std::string sensor_id = "env";
};

inline TemperatureSeries gen_env(const EnvModel& model) {
  if (model.interval_min <= 0 || model.span_days <= 0)
    throw std::invalid_argument("span and interval must be positive");
  TemperatureSeries out;
  out.sensor_id = model.sensor_id;
  out.kind = SensorKind::Environment;
  out.interval_min = model.interval_min;
  out.utc_offset_min = model.utc_offset_min;

  detail::GaussianRng rng(model.seed);
  const std::int64_t step = std::int64_t(model.interval_min) * kSecPerMin;
  const std::int64_t n = std::int64_t(model.span_days) * kSecPerDay / step;
  out.readings.reserve(std::size_t(n));
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t t_sec = i * step;
    const double t_hours = double(t_sec) / double(kSecPerHour);
    const double t_days = double(t_sec) / double(kSecPerDay);
    double v = model.mean_c + model.daily_amp_c * std::sin(two_pi * (t_hours - model.phase_hours) / 24.0) +
               model.seasonal_amp_c * std::sin(two_pi * t_days / 365.0) +
               rng.next(model.noise_sigma_c);
    out.readings.push_back({model.start + t_sec, detail::quantize(v, model.quantization_c)});
  }
  return out;
}

/// Piecewise-linear (m, delta_t) trajectory: knots at day offsets from the
/// env start, held constant before the first and after the last knot.
struct ModelKnot {
  double day = 0.0;
  double m = 0.0;
  double delta_t = 0.0;
};

struct HiveScenario {
  std::vector<ModelKnot> track{{0.0, 0.3, 8.0}};
  double t_d = 34.5;
  int tau_min = 60;
  double noise_sigma_c = 0.0;
  double quantization_c = kLoggerResolutionC;
  std::uint64_t seed = 2;
  std::string sensor_id = "hive";
};

namespace detail {

inline ModelKnot track_at(const std::vector<ModelKnot>& track, double day) {
  if (track.empty()) throw std::invalid_argument("empty model track");
  if (day <= track.front().day) return {day, track.front().m, track.front().delta_t};
  if (day >= track.back().day) return {day, track.back().m, track.back().delta_t};
  for (std::size_t i = 1; i < track.size(); ++i) {
    if (day <= track[i].day) {
      const ModelKnot& a = track[i - 1];
      const ModelKnot& b = track[i];
      const double f = (day - a.day) / (b.day - a.day);
      return {day, a.m + f * (b.m - a.m), a.delta_t + f * (b.delta_t - a.delta_t)};
    }
  }
  return {day, track.back().m, track.back().delta_t};
}

}  // namespace detail

/// Hive temperature generated from the env series by the linear response
/// model with delay tau: the reading at t + tau is driven by the env reading
/// at t and the model state at t. The output shares the env grid with the
/// leading tau portion dropped.
inline TemperatureSeries gen_hive(const TemperatureSeries& env, const HiveScenario& scen) {
  if (scen.tau_min < 0 || (env.interval_min > 0 && scen.tau_min % env.interval_min != 0))
    throw std::invalid_argument("tau must be a non-negative multiple of the env interval");
  TemperatureSeries out;
  out.sensor_id = scen.sensor_id;
  out.kind = SensorKind::Hive;
  out.interval_min = env.interval_min;
  out.utc_offset_min = env.utc_offset_min;

  detail::GaussianRng rng(scen.seed);
  const std::int64_t tau_sec = std::int64_t(scen.tau_min) * kSecPerMin;
  out.readings.reserve(env.size());
  for (const Reading& src : env.readings) {
    const Instant t_out = src.t + tau_sec;
    // Emit only onto the env grid; with tau a grid multiple this drops
    // exactly the leading tau portion.
    if (t_out > env.end()) break;
    if (!env.index_of(t_out)) continue;
    const double src_day = days_between(env.start(), src.t);
    const ModelKnot k = detail::track_at(scen.track, src_day);
    const ThermoModel model{k.m, k.delta_t, scen.t_d};
    const double v = predict_hive_temp(model, src.temp_c) + rng.next(scen.noise_sigma_c);
    out.readings.push_back({t_out, detail::quantize(v, scen.quantization_c)});
  }
  return out;
}

/// Ground truth kept alongside a generated dataset, for harness comparison.
struct SynthResult {
  HiveDataset dataset;
  std::map<std::string, HiveScenario> truth;
};

/// Two-hive degradation benchmark: a healthy control at constant start_m and
/// a degrading hive whose slope drifts linearly start_m -> end_m over
/// drift_days after a healthy lead-in. The degrading hive's delta_t decays
/// quadratically to dt_end over the same drift, reflecting the faster loss
/// of metabolic heat than of insulation.
struct DegradationConfig {
  double start_m = 0.05;
  double end_m = 1.0;
  double drift_days = 30.0;
  double lead_days = 8.0;
  double tail_days = 0.0;
  double dt_start = 10.0;
  double dt_end = 0.0;
  double t_d = 34.5;
  int tau_min = 60;
  double noise_sigma_c = 0.1;
  double quantization_c = kLoggerResolutionC;
  EnvModel env;
  Hemisphere hemisphere = Hemisphere::South;
  std::string label = "degradation";
  std::uint64_t seed = 42;
};

inline SynthResult degradation_scenario(const DegradationConfig& cfg) {
  if (!(0.0 <= cfg.start_m && cfg.start_m <= cfg.end_m && cfg.end_m <= 1.0))
    throw std::invalid_argument("need 0 <= start_m <= end_m <= 1");

  EnvModel env_model = cfg.env;
  env_model.span_days =
      int(std::ceil(cfg.lead_days + cfg.drift_days + cfg.tail_days)) ;
  env_model.seed = cfg.seed;
  env_model.noise_sigma_c = cfg.noise_sigma_c;
  env_model.quantization_c = cfg.quantization_c;

  HiveScenario healthy;
  healthy.track = {{0.0, cfg.start_m, cfg.dt_start}};
  healthy.t_d = cfg.t_d;
  healthy.tau_min = cfg.tau_min;
  healthy.noise_sigma_c = cfg.noise_sigma_c;
  healthy.quantization_c = cfg.quantization_c;
  healthy.seed = cfg.seed + 1;
  healthy.sensor_id = "healthy";

  HiveScenario degrading = healthy;
  degrading.seed = cfg.seed + 2;
  degrading.sensor_id = "degrading";
  degrading.track.clear();
  degrading.track.push_back({0.0, cfg.start_m, cfg.dt_start});
  const int knots = 60;
  for (int i = 0; i <= knots; ++i) {
    const double p = double(i) / double(knots);
    const double day = cfg.lead_days + p * cfg.drift_days;
    const double m = cfg.start_m + p * (cfg.end_m - cfg.start_m);
    const double dt = cfg.dt_end + (cfg.dt_start - cfg.dt_end) * (1.0 - p) * (1.0 - p);
    degrading.track.push_back({day, m, dt});
  }

  SynthResult out;
  out.dataset.env = gen_env(env_model);
  out.dataset.hemisphere = cfg.hemisphere;
  out.dataset.label = cfg.label;
  out.dataset.hives.emplace("healthy", gen_hive(out.dataset.env, healthy));
  out.dataset.hives.emplace("degrading", gen_hive(out.dataset.env, degrading));
  out.truth.emplace("healthy", healthy);
  out.truth.emplace("degrading", degrading);
  return out;
}

/// Ground-truth sidecar: the effective (m, delta_t, tau) behind each reading
/// of a generated hive series.
inline void write_truth_csv(std::ostream& out, const TemperatureSeries& env,
                            const TemperatureSeries& hive, const HiveScenario& scen) {
  out << "timestamp,m,delta_t,tau_min\n";
  const std::int64_t tau_sec = std::int64_t(scen.tau_min) * kSecPerMin;
  char buf[80];
  for (const Reading& r : hive.readings) {
    const double src_day = days_between(env.start(), r.t - tau_sec);
    const ModelKnot k = detail::track_at(scen.track, src_day);
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%d", k.m, k.delta_t, scen.tau_min);
    out << format_iso8601(r.t, hive.utc_offset_min) << ',' << buf << '\n';
  }
}

}  // namespace hivemon
