// hivemon: hive status diagnostics from paired environmental and hive
// temperature records. Subcommands wire ingestion -> estimation ->
// classification -> summaries with deterministic, scriptable outputs.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hivemon/classify.hpp"
#include "hivemon/collapse_stats.hpp"
#include "hivemon/estimators.hpp"
#include "hivemon/gridmap.hpp"
#include "hivemon/ingest.hpp"
#include "hivemon/synth.hpp"
#include "hivemon/timeutil.hpp"
#include "hivemon/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Removes everything this run wrote unless the command commits, so a failed
// run leaves no partial outputs behind.
class OutputTracker {
 public:
  OutputTracker() = default;
  OutputTracker(const OutputTracker&) = delete;
  ~OutputTracker() {
    if (committed_) return;
    for (const fs::path& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

  void note(const fs::path& p) { written_.push_back(p); }

  std::ofstream open(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw hivemon::Error("cannot write " + p.string());
    note(p);
    return out;
  }

  void commit() { committed_ = true; }
  std::size_t count() const { return written_.size(); }

 private:
  std::vector<fs::path> written_;
  bool committed_ = false;
};

fs::path resolve_out_dir(std::string flag_value) {
  if (flag_value.empty()) {
    if (const char* env = std::getenv("HIVEMON_OUTPUT_DIR")) flag_value = env;
  }
  if (flag_value.empty()) throw ConfigError("no output directory: pass --out or set HIVEMON_OUTPUT_DIR");
  fs::path dir(flag_value);
  fs::create_directories(dir);
  return dir;
}

hivemon::Instant parse_time_flag(const std::string& s, const char* flag) {
  const auto t = hivemon::parse_iso8601(s);
  if (!t) throw ConfigError(std::string("bad timestamp for ") + flag + ": " + s);
  return t->t;
}

// --- analyze ---

struct AnalyzeOpts {
  std::string manifest;
  std::string out;
  std::string method = "both";
  std::string format = "csv";
  int window_days = 7;
  int step_min = 0;
  int max_lag_min = 240;
  double t_d = 34.5;
  std::string t_d_from, t_d_to;
  int max_gap_min = 60;
  std::size_t n_min_pairs = 4;
  std::size_t n_min_samples = 96;
  int jobs = 0;
};

struct HiveRun {
  std::map<hivemon::Method, std::pair<std::vector<hivemon::WindowEstimate>, hivemon::SkipStats>>
      by_method;
  double t_d_used = 0.0;
};

json skip_json(const hivemon::SkipStats& s) {
  json j;
  j["gap"] = s.gap;
  j["insufficient_pairs"] = s.insufficient_pairs;
  j["insufficient_samples"] = s.insufficient_samples;
  return j;
}

int cmd_analyze(const AnalyzeOpts& opt) {
  if (opt.window_days <= 0) throw ConfigError("--window-days must be positive");
  if (opt.max_lag_min < 0 || opt.max_lag_min > 240)
    throw ConfigError("--max-lag-min must be in [0, 240]");
  if (opt.step_min < 0) throw ConfigError("--step-min must be non-negative");
  if (opt.format != "csv" && opt.format != "jsonl") throw ConfigError("--format must be csv or jsonl");
  if (opt.t_d_from.empty() != opt.t_d_to.empty())
    throw ConfigError("--t-d-from and --t-d-to must be given together");
  std::vector<hivemon::Method> methods;
  if (opt.method == "both" || opt.method == "extremes") methods.push_back(hivemon::Method::Extremes);
  if (opt.method == "both" || opt.method == "crosscorr")
    methods.push_back(hivemon::Method::CrossCorr);
  if (methods.empty()) throw ConfigError("--method must be extremes, crosscorr or both");

  const fs::path out_dir = resolve_out_dir(opt.out);
  const hivemon::HiveDataset ds = hivemon::load_dataset(opt.manifest);

  hivemon::EstimatorConfig cfg;
  cfg.t_d = opt.t_d;
  cfg.window_days = opt.window_days;
  cfg.step_min = opt.step_min;
  cfg.max_lag_min = opt.max_lag_min;
  cfg.n_min_pairs = opt.n_min_pairs;
  cfg.n_min_samples = opt.n_min_samples;
  cfg.max_gap_min = opt.max_gap_min;

  std::optional<std::pair<hivemon::Instant, hivemon::Instant>> calib;
  if (!opt.t_d_from.empty())
    calib = {parse_time_flag(opt.t_d_from, "--t-d-from"), parse_time_flag(opt.t_d_to, "--t-d-to")};

  std::vector<std::string> ids;
  for (const auto& [id, _] : ds.hives) ids.push_back(id);

  auto run_hive = [&](const std::string& id) {
    HiveRun r;
    hivemon::EstimatorConfig hive_cfg = cfg;
    if (calib) hive_cfg.t_d = hivemon::calibrate_t_d(ds.hives.at(id), calib->first, calib->second);
    r.t_d_used = hive_cfg.t_d;
    for (const hivemon::Method m : methods) {
      hivemon::SkipStats skips;
      auto est = hivemon::rolling_estimates(ds, id, m, hive_cfg, &skips);
      r.by_method.emplace(m, std::make_pair(std::move(est), skips));
    }
    return r;
  };

  // Per-hive tasks are independent; results are merged in manifest order.
  std::map<std::string, HiveRun> runs;
  const int jobs = opt.jobs > 0 ? opt.jobs : int(ids.size());
  if (jobs <= 1) {
    for (const auto& id : ids) runs.emplace(id, run_hive(id));
  } else {
    for (std::size_t base = 0; base < ids.size(); base += std::size_t(jobs)) {
      std::vector<std::future<HiveRun>> batch;
      const std::size_t stop = std::min(ids.size(), base + std::size_t(jobs));
      for (std::size_t i = base; i < stop; ++i)
        batch.push_back(std::async(std::launch::async, run_hive, ids[i]));
      for (std::size_t i = base; i < stop; ++i) runs.emplace(ids[i], batch[i - base].get());
    }
  }

  OutputTracker tracker;
  std::size_t total_estimates = 0, total_skipped = 0;
  json manifest;
  manifest["command"] = "analyze";
  manifest["version"] = hivemon::kVersion;
  json cfg_json;
  cfg_json["manifest"] = opt.manifest;
  cfg_json["method"] = opt.method;
  cfg_json["format"] = opt.format;
  cfg_json["window_days"] = opt.window_days;
  cfg_json["step_min"] = opt.step_min;
  cfg_json["max_lag_min"] = opt.max_lag_min;
  cfg_json["t_d"] = opt.t_d;
  cfg_json["t_d_calibration"] = calib ? json::array({opt.t_d_from, opt.t_d_to}) : json();
  cfg_json["max_gap_min"] = opt.max_gap_min;
  cfg_json["n_min_pairs"] = opt.n_min_pairs;
  cfg_json["n_min_samples"] = opt.n_min_samples;
  manifest["config"] = cfg_json;
  manifest["config_hash"] = hex64(fnv1a64(cfg_json.dump()));
  manifest["gap_policy"] =
      "gaps up to max_gap_min are linearly interpolated; longer gaps split the record and "
      "windows crossing a split are skipped";
  manifest["dataset_label"] = ds.label;
  manifest["hives"] = json::object();

  for (const auto& id : ids) {
    const HiveRun& r = runs.at(id);
    json hj;
    hj["t_d"] = r.t_d_used;
    for (const auto& [m, result] : r.by_method) {
      const auto& [estimates, skips] = result;
      const std::string name = id + "_" + hivemon::to_string(m) + (opt.format == "csv" ? ".csv" : ".jsonl");
      auto out = tracker.open(out_dir / name);
      if (opt.format == "csv")
        hivemon::write_estimates_csv(out, estimates, ds.utc_offset_min());
      else
        hivemon::write_estimates_jsonl(out, estimates, ds.utc_offset_min());
      json mj;
      mj["file"] = name;
      mj["estimates"] = estimates.size();
      mj["skipped_windows"] = skip_json(skips);
      hj[hivemon::to_string(m)] = mj;
      total_estimates += estimates.size();
      total_skipped += skips.total();
    }
    manifest["hives"][id] = hj;
  }
  {
    auto out = tracker.open(out_dir / "run_manifest.json");
    out << manifest.dump(2) << '\n';
  }
  tracker.commit();
  std::cout << "analyze: " << ids.size() << " hives, " << methods.size() << " methods, "
            << tracker.count() << " files, " << total_estimates << " estimates, " << total_skipped
            << " skipped windows\n";
  return kExitOk;
}

// --- classify ---

struct ThresholdOpts {
  double pi_warn = 3.5;
  double delta_t_warn = 8.0;
  double pi_collapse = 1.5;
  double winter_pi_warn = 1.5;
  int confirm_days = 2;
  std::string warn_combinator = "any";

  hivemon::StatusThresholds to_thresholds() const {
    hivemon::StatusThresholds th;
    th.pi_warn = pi_warn;
    th.delta_t_warn = delta_t_warn;
    th.pi_collapse = pi_collapse;
    th.winter_pi_warn = winter_pi_warn;
    th.confirm_days = confirm_days;
    if (warn_combinator == "any")
      th.warn_combinator = hivemon::WarnCombinator::Any;
    else if (warn_combinator == "all")
      th.warn_combinator = hivemon::WarnCombinator::All;
    else
      throw ConfigError("--warn-combinator must be any or all");
    if (!th.valid())
      throw ConfigError("thresholds must satisfy pi_collapse <= winter_pi_warn <= pi_warn");
    return th;
  }
};

void add_threshold_flags(CLI::App* app, ThresholdOpts& t) {
  app->add_option("--pi-warn", t.pi_warn, "Warning threshold on pi");
  app->add_option("--delta-t-warn", t.delta_t_warn, "Warning threshold on delta_t (C)");
  app->add_option("--pi-collapse", t.pi_collapse, "Collapse threshold on pi");
  app->add_option("--winter-pi-warn", t.winter_pi_warn, "Winter warning threshold on pi");
  app->add_option("--confirm-days", t.confirm_days, "Consecutive days to confirm a collapse");
  app->add_option("--warn-combinator", t.warn_combinator,
                  "Combine pi/delta_t warning conditions: any|all");
}

std::vector<hivemon::WindowEstimate> read_estimates_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw hivemon::Error("cannot open " + p.string());
  if (p.extension() == ".jsonl") return hivemon::read_estimates_jsonl(in);
  return hivemon::read_estimates_csv(in);
}

// Estimate files discovered per hive and method under a directory.
std::map<std::string, std::map<hivemon::Method, fs::path>> find_estimate_files(
    const fs::path& dir, const hivemon::HiveDataset& ds) {
  std::map<std::string, std::map<hivemon::Method, fs::path>> out;
  for (const auto& [id, _] : ds.hives) {
    for (const hivemon::Method m : {hivemon::Method::Extremes, hivemon::Method::CrossCorr}) {
      for (const char* ext : {".csv", ".jsonl"}) {
        const fs::path p = dir / (id + "_" + hivemon::to_string(m) + ext);
        if (fs::exists(p)) {
          out[id][m] = p;
          break;
        }
      }
    }
  }
  return out;
}

struct ClassifyOpts {
  std::string manifest;
  std::string estimates;
  std::string out;
  ThresholdOpts thresholds;
};

int cmd_classify(const ClassifyOpts& opt) {
  const hivemon::StatusThresholds th = opt.thresholds.to_thresholds();
  const fs::path out_dir = resolve_out_dir(opt.out);
  const hivemon::HiveDataset ds = hivemon::load_dataset(opt.manifest);
  const auto files = find_estimate_files(opt.estimates, ds);
  if (files.empty()) throw hivemon::Error("no estimate files found under " + opt.estimates);

  OutputTracker tracker;
  json summary;
  summary["version"] = hivemon::kVersion;
  summary["hives"] = json::object();
  std::size_t timelines = 0, episodes = 0, collapses = 0;
  for (const auto& [id, by_method] : files) {
    json hj;
    for (const auto& [m, path] : by_method) {
      const auto estimates = read_estimates_file(path);
      const auto tl = hivemon::build_timeline(id, estimates, ds.hemisphere, ds.utc_offset_min(), th);
      auto out = tracker.open(out_dir / (id + "_" + hivemon::to_string(m) + "_timeline.csv"));
      hivemon::write_timeline_csv(out, tl, ds.utc_offset_min());
      hj[hivemon::to_string(m)] = hivemon::timeline_summary_json(tl, ds.utc_offset_min());
      ++timelines;
      episodes += tl.episodes.size();
      collapses += tl.collapse_onset.has_value();
    }
    summary["hives"][id] = hj;
  }
  {
    auto out = tracker.open(out_dir / "summary.json");
    out << summary.dump(2) << '\n';
  }
  tracker.commit();
  std::cout << "classify: " << timelines << " timelines, " << episodes << " warnings, "
            << collapses << " collapses\n";
  return kExitOk;
}

// --- grid ---

struct GridOpts {
  std::string manifest;
  std::string estimates;
  std::string out;
  std::string method = "crosscorr";
  double pi_lo = 0.0, pi_hi = hivemon::kPiCap;
  double dt_lo = -5.0, dt_hi = 20.0;
  ThresholdOpts thresholds;
};

int cmd_grid(const GridOpts& opt) {
  const hivemon::StatusThresholds th = opt.thresholds.to_thresholds();
  const auto method = hivemon::method_from_string(opt.method);
  if (!method) throw ConfigError("--method must be extremes or crosscorr");
  hivemon::GridSpec spec;
  spec.pi_lo = opt.pi_lo;
  spec.pi_hi = opt.pi_hi;
  spec.dt_lo = opt.dt_lo;
  spec.dt_hi = opt.dt_hi;
  if (!(spec.pi_lo < spec.pi_hi && spec.dt_lo < spec.dt_hi))
    throw ConfigError("grid ranges must be non-empty");
  for (const double bound : {spec.pi_lo, spec.pi_hi, spec.dt_lo, spec.dt_hi}) {
    const double steps = bound / spec.cell;
    if (std::abs(steps - std::round(steps)) > 1e-9)
      throw ConfigError("grid bounds must be multiples of the 0.5 cell size");
  }

  const fs::path out_dir = resolve_out_dir(opt.out);
  const hivemon::HiveDataset ds = hivemon::load_dataset(opt.manifest);
  const auto files = find_estimate_files(opt.estimates, ds);

  // Hives whose confirmed timeline collapses are the eventually-collapsed
  // class; everything else counts as healthy.
  std::vector<hivemon::LabeledPoint> points;
  std::map<std::string, hivemon::Instant> onsets;
  std::size_t hives_used = 0;
  for (const auto& [id, by_method] : files) {
    const auto it = by_method.find(*method);
    if (it == by_method.end()) continue;
    const auto estimates = read_estimates_file(it->second);
    const auto tl = hivemon::build_timeline(id, estimates, ds.hemisphere, ds.utc_offset_min(), th);
    const auto label =
        tl.collapse_onset ? hivemon::HiveClass::EventuallyCollapsed : hivemon::HiveClass::Healthy;
    if (tl.collapse_onset) onsets.emplace(id, *tl.collapse_onset);
    const auto labeled =
        hivemon::label_estimates(id, estimates, label, ds.hemisphere, ds.utc_offset_min());
    points.insert(points.end(), labeled.begin(), labeled.end());
    ++hives_used;
  }
  if (hives_used == 0) throw hivemon::Error("no estimate files for method " + opt.method);

  const hivemon::GridSummary grid = hivemon::accumulate(points, onsets, spec);
  const auto zones = hivemon::zone_summary(points, th);

  OutputTracker tracker;
  {
    auto out = tracker.open(out_dir / ("grid_" + opt.method + ".csv"));
    hivemon::write_grid_csv(out, grid);
  }
  {
    auto out = tracker.open(out_dir / ("grid_" + opt.method + ".json"));
    out << hivemon::grid_json(grid, zones).dump(2) << '\n';
  }
  tracker.commit();
  std::cout << "grid: " << grid.total << " points, " << grid.cells.size() << " cells, "
            << grid.clamped << " clamped\n";
  return kExitOk;
}

// --- collapse-stats ---

struct CollapseStatsOpts {
  std::string manifest;
  std::string out;
  double corr_min = 0.8;
  double scale_ratio_min = 0.5;
  int max_gap_min = 60;
};

int cmd_collapse_stats(const CollapseStatsOpts& opt) {
  const fs::path out_dir = resolve_out_dir(opt.out);
  const hivemon::HiveDataset ds = hivemon::load_dataset(opt.manifest);

  hivemon::OnsetConfig cfg;
  cfg.corr_min = opt.corr_min;
  cfg.scale_ratio_min = opt.scale_ratio_min;

  std::map<std::string, std::vector<hivemon::RollingStats>> stats;
  std::map<std::string, hivemon::CollapseOnsetResult> results;
  std::size_t onsets = 0;
  for (const auto& [id, hive] : ds.hives) {
    const auto [env_a, hive_a] = hivemon::align(ds.env, hive, opt.max_gap_min);
    std::vector<hivemon::RollingStats> per_window;
    for (int w = cfg.window_min_days; w <= cfg.window_max_days; ++w) {
      try {
        per_window.push_back(hivemon::rolling_mean_std(hive_a, w, cfg.step_min));
      } catch (const hivemon::WindowTooLong&) {
      }
    }
    stats.emplace(id, std::move(per_window));
    auto r = hivemon::collapse_onset_statistical(env_a, hive_a, cfg);
    onsets += r.onset.has_value();
    results.emplace(id, std::move(r));
  }

  OutputTracker tracker;
  {
    auto out = tracker.open(out_dir / "rolling_stats.csv");
    hivemon::write_rolling_stats_csv(out, stats, ds.utc_offset_min());
  }
  {
    auto out = tracker.open(out_dir / "error_curve.csv");
    hivemon::write_error_curve_csv(out, results, ds.utc_offset_min());
  }
  {
    json j;
    j["version"] = hivemon::kVersion;
    j["onsets"] = json::object();
    for (const auto& [id, r] : results)
      j["onsets"][id] =
          r.onset ? json(hivemon::format_iso8601(*r.onset, ds.utc_offset_min())) : json();
    auto out = tracker.open(out_dir / "onsets.json");
    out << j.dump(2) << '\n';
  }
  tracker.commit();
  std::cout << "collapse-stats: " << ds.hives.size() << " hives, " << onsets << " onsets\n";
  return kExitOk;
}

// --- synth ---

struct SynthOpts {
  std::string out;
  std::string scenario = "degradation";
  std::uint64_t seed = 42;
  int span_days = 38;
  int interval_min = 15;
  double env_mean = 22.0;
  double daily_amp = 8.0;
  double seasonal_amp = 0.0;
  double noise_sigma = 0.1;
  double quantization = hivemon::kLoggerResolutionC;
  double t_d = 34.5;
  int tau_min = 60;
  double m = 0.3;
  double delta_t = 8.0;
  double start_m = 0.05;
  double end_m = 1.0;
  double drift_days = 30.0;
  double lead_days = 8.0;
  double tail_days = 0.0;
  std::string start = "2020-01-22T00:00:00+10:00";
  std::string hemisphere = "south";
  std::string label = "synthetic";
};

int cmd_synth(const SynthOpts& opt) {
  const fs::path out_dir = resolve_out_dir(opt.out);
  const auto start = hivemon::parse_iso8601(opt.start);
  if (!start) throw ConfigError("bad --start timestamp: " + opt.start);
  const hivemon::Hemisphere hemisphere = [&] {
    try {
      return hivemon::parse_hemisphere(opt.hemisphere);
    } catch (const hivemon::Error& e) {
      throw ConfigError(e.what());
    }
  }();

  hivemon::EnvModel env;
  env.mean_c = opt.env_mean;
  env.daily_amp_c = opt.daily_amp;
  env.seasonal_amp_c = opt.seasonal_amp;
  env.noise_sigma_c = opt.noise_sigma;
  env.span_days = opt.span_days;
  env.interval_min = opt.interval_min;
  env.seed = opt.seed;
  env.quantization_c = opt.quantization;
  env.start = start->t;
  env.utc_offset_min = start->utc_offset_min;

  hivemon::SynthResult result;
  if (opt.scenario == "degradation") {
    hivemon::DegradationConfig cfg;
    cfg.start_m = opt.start_m;
    cfg.end_m = opt.end_m;
    cfg.drift_days = opt.drift_days;
    cfg.lead_days = opt.lead_days;
    cfg.tail_days = opt.tail_days;
    cfg.t_d = opt.t_d;
    cfg.tau_min = opt.tau_min;
    cfg.noise_sigma_c = opt.noise_sigma;
    cfg.quantization_c = opt.quantization;
    cfg.env = env;
    cfg.hemisphere = hemisphere;
    cfg.label = opt.label;
    cfg.seed = opt.seed;
    try {
      result = hivemon::degradation_scenario(cfg);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (opt.scenario == "constant") {
    result.dataset.env = hivemon::gen_env(env);
    result.dataset.hemisphere = hemisphere;
    result.dataset.label = opt.label;
    hivemon::HiveScenario scen;
    scen.track = {{0.0, opt.m, opt.delta_t}};
    scen.t_d = opt.t_d;
    scen.tau_min = opt.tau_min;
    scen.noise_sigma_c = opt.noise_sigma;
    scen.quantization_c = opt.quantization;
    scen.seed = opt.seed + 1;
    scen.sensor_id = "hive1";
    result.dataset.hives.emplace("hive1", hivemon::gen_hive(result.dataset.env, scen));
    result.truth.emplace("hive1", scen);
  } else {
    throw ConfigError("--scenario must be degradation or constant");
  }

  OutputTracker tracker;
  {
    auto out = tracker.open(out_dir / "env.csv");
    hivemon::serialize_series(result.dataset.env, out);
  }
  std::map<std::string, std::string> hive_files;
  for (const auto& [id, series] : result.dataset.hives) {
    {
      auto out = tracker.open(out_dir / (id + ".csv"));
      hivemon::serialize_series(series, out);
    }
    {
      auto out = tracker.open(out_dir / (id + "_truth.csv"));
      hivemon::write_truth_csv(out, result.dataset.env, series, result.truth.at(id));
    }
    hive_files.emplace(id, id + ".csv");
  }
  tracker.note(out_dir / "manifest.json");
  hivemon::save_manifest(out_dir / "manifest.json", result.dataset.label,
                         result.dataset.hemisphere, "env.csv", hive_files);
  tracker.commit();
  std::cout << "synth: wrote " << tracker.count() << " files to " << out_dir.string() << " (seed "
            << opt.seed << ")\n";
  return kExitOk;
}

// --- report ---

struct ReportOpts {
  std::string manifest;
  std::string estimates;
  std::string out;
  ThresholdOpts thresholds;
};

int cmd_report(const ReportOpts& opt) {
  const hivemon::StatusThresholds th = opt.thresholds.to_thresholds();
  const hivemon::HiveDataset ds = hivemon::load_dataset(opt.manifest);
  const auto files = find_estimate_files(opt.estimates, ds);
  if (files.empty()) throw hivemon::Error("no estimate files found under " + opt.estimates);

  json report;
  report["version"] = hivemon::kVersion;
  report["dataset_label"] = ds.label;
  report["hives"] = json::object();
  std::map<hivemon::Method, std::vector<hivemon::LabeledPoint>> points_by_method;
  std::map<std::string, hivemon::Instant> onsets;
  std::size_t timelines = 0;

  for (const auto& [id, by_method] : files) {
    json hj;
    for (const auto& [m, path] : by_method) {
      const auto estimates = read_estimates_file(path);
      const auto tl = hivemon::build_timeline(id, estimates, ds.hemisphere, ds.utc_offset_min(), th);
      json tj = hivemon::timeline_summary_json(tl, ds.utc_offset_min());
      tj["timeline"] = json::array();
      for (const auto& p : tl.points) {
        json pj;
        pj["t"] = hivemon::format_iso8601(p.t, ds.utc_offset_min());
        pj["status"] = hivemon::to_string(p.status);
        pj["pi"] = p.pi ? json(*p.pi) : json();
        pj["delta_t"] = p.delta_t ? json(*p.delta_t) : json();
        pj["season"] = hivemon::to_string(p.season);
        tj["timeline"].push_back(pj);
      }
      hj[hivemon::to_string(m)] = tj;
      ++timelines;
      if (tl.collapse_onset) onsets.emplace(id, *tl.collapse_onset);
      const auto label =
          tl.collapse_onset ? hivemon::HiveClass::EventuallyCollapsed : hivemon::HiveClass::Healthy;
      const auto labeled =
          hivemon::label_estimates(id, estimates, label, ds.hemisphere, ds.utc_offset_min());
      auto& dst = points_by_method[m];
      dst.insert(dst.end(), labeled.begin(), labeled.end());
    }
    report["hives"][id] = hj;
  }
  report["zones"] = json::object();
  for (const auto& [m, points] : points_by_method) {
    const auto zones = hivemon::zone_summary(points, th);
    json zj = json::array();
    for (const auto& z : zones) {
      json e;
      e["zone"] = hivemon::to_string(z.zone);
      e["n_points"] = z.n_points;
      e["n_healthy"] = z.n_healthy;
      e["healthy_ratio"] = z.healthy_ratio ? json(*z.healthy_ratio) : json();
      zj.push_back(e);
    }
    report["zones"][hivemon::to_string(m)] = zj;
  }

  if (opt.out.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    const fs::path out_file(opt.out);
    if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
    std::ofstream out(out_file, std::ios::binary);
    if (!out) throw hivemon::Error("cannot write " + out_file.string());
    out << report.dump(2) << '\n';
    std::cout << "report: " << timelines << " timelines written to " << out_file.string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hive status diagnostics from temperature time series"};
  app.set_version_flag("--version", std::string("hivemon ") + hivemon::kVersion);
  app.require_subcommand(1);

  AnalyzeOpts analyze;
  auto* a = app.add_subcommand("analyze", "Rolling-window indicator estimates per hive");
  a->add_option("--manifest", analyze.manifest, "Dataset manifest JSON")->required();
  a->add_option("--out", analyze.out, "Output directory");
  a->add_option("--method", analyze.method, "extremes|crosscorr|both");
  a->add_option("--format", analyze.format, "csv|jsonl");
  a->add_option("--window-days", analyze.window_days, "Rolling window span in days");
  a->add_option("--step-min", analyze.step_min, "Window step in minutes (0: method default)");
  a->add_option("--max-lag-min", analyze.max_lag_min, "Largest cross-correlation lag in minutes");
  a->add_option("--t-d", analyze.t_d, "Desired hive temperature (C)");
  a->add_option("--t-d-from", analyze.t_d_from, "Calibrate t_d from this instant");
  a->add_option("--t-d-to", analyze.t_d_to, "Calibrate t_d up to this instant");
  a->add_option("--max-gap-min", analyze.max_gap_min, "Largest gap filled by interpolation");
  a->add_option("--n-min-pairs", analyze.n_min_pairs, "Minimum extreme pairs per window");
  a->add_option("--n-min-samples", analyze.n_min_samples, "Minimum samples per window");
  a->add_option("--jobs", analyze.jobs, "Parallel hive tasks (0: one per hive)");

  ClassifyOpts classify;
  auto* c = app.add_subcommand("classify", "Status timelines from estimate files");
  c->add_option("--manifest", classify.manifest, "Dataset manifest JSON")->required();
  c->add_option("--estimates", classify.estimates, "Directory of estimate files")->required();
  c->add_option("--out", classify.out, "Output directory");
  add_threshold_flags(c, classify.thresholds);

  GridOpts grid;
  auto* g = app.add_subcommand("grid", "0.5 x 0.5 (pi, delta_t) grid summary");
  g->add_option("--manifest", grid.manifest, "Dataset manifest JSON")->required();
  g->add_option("--estimates", grid.estimates, "Directory of estimate files")->required();
  g->add_option("--out", grid.out, "Output directory");
  g->add_option("--method", grid.method, "Which method's estimates to grid");
  g->add_option("--pi-lo", grid.pi_lo, "Grid lower pi bound");
  g->add_option("--pi-hi", grid.pi_hi, "Grid upper pi bound");
  g->add_option("--dt-lo", grid.dt_lo, "Grid lower delta_t bound");
  g->add_option("--dt-hi", grid.dt_hi, "Grid upper delta_t bound");
  add_threshold_flags(g, grid.thresholds);

  CollapseStatsOpts cstats;
  auto* s = app.add_subcommand("collapse-stats", "Rolling statistics and divergence error");
  s->add_option("--manifest", cstats.manifest, "Dataset manifest JSON")->required();
  s->add_option("--out", cstats.out, "Output directory");
  s->add_option("--corr-min", cstats.corr_min, "Std-scaling correlation threshold");
  s->add_option("--scale-ratio-min", cstats.scale_ratio_min,
                "Std mean-ratio threshold when correlation is undefined");
  s->add_option("--max-gap-min", cstats.max_gap_min, "Largest gap filled by interpolation");

  SynthOpts synth;
  auto* y = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth");
  y->add_option("--out", synth.out, "Output directory");
  y->add_option("--scenario", synth.scenario, "degradation|constant");
  y->add_option("--seed", synth.seed, "Random seed");
  y->add_option("--span-days", synth.span_days, "Environment span in days (constant scenario)");
  y->add_option("--interval-min", synth.interval_min, "Sampling interval in minutes");
  y->add_option("--env-mean", synth.env_mean, "Mean environmental temperature (C)");
  y->add_option("--daily-amp", synth.daily_amp, "Daily sinusoid amplitude (C)");
  y->add_option("--seasonal-amp", synth.seasonal_amp, "Seasonal sinusoid amplitude (C)");
  y->add_option("--noise-sigma", synth.noise_sigma, "Gaussian sensor noise sigma (C)");
  y->add_option("--quantization", synth.quantization, "Sensor resolution (C), 0 disables");
  y->add_option("--t-d", synth.t_d, "Desired hive temperature (C)");
  y->add_option("--tau-min", synth.tau_min, "Hive response delay in minutes");
  y->add_option("--m", synth.m, "Constant-scenario slope");
  y->add_option("--delta-t", synth.delta_t, "Constant-scenario delta_t (C)");
  y->add_option("--start-m", synth.start_m, "Degradation start slope");
  y->add_option("--end-m", synth.end_m, "Degradation end slope");
  y->add_option("--drift-days", synth.drift_days, "Degradation drift duration in days");
  y->add_option("--lead-days", synth.lead_days, "Healthy lead-in before the drift");
  y->add_option("--tail-days", synth.tail_days, "Days appended after the drift");
  y->add_option("--start", synth.start, "Record start timestamp (ISO-8601 with offset)");
  y->add_option("--hemisphere", synth.hemisphere, "north|south");
  y->add_option("--label", synth.label, "Dataset label");

  ReportOpts report;
  auto* r = app.add_subcommand("report", "Consolidated JSON of timelines and zone summaries");
  r->add_option("--manifest", report.manifest, "Dataset manifest JSON")->required();
  r->add_option("--estimates", report.estimates, "Directory of estimate files")->required();
  r->add_option("--out", report.out, "Output file (stdout when omitted)");
  add_threshold_flags(r, report.thresholds);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (a->parsed()) return cmd_analyze(analyze);
    if (c->parsed()) return cmd_classify(classify);
    if (g->parsed()) return cmd_grid(grid);
    if (s->parsed()) return cmd_collapse_stats(cstats);
    if (y->parsed()) return cmd_synth(synth);
    if (r->parsed()) return cmd_report(report);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const hivemon::Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}
