#include <doctest.h>

#include <algorithm>
#include <random>

#include "hivemon/gridmap.hpp"

using namespace hivemon;

namespace {

const Instant kStart = parse_iso8601("2020-01-22T00:00:00+10:00")->t;

LabeledPoint point(const std::string& id, double pi, double dt, HiveClass label,
                   Season season = Season::Summer, double days_before_onset = 0.0) {
  LabeledPoint p;
  p.hive_id = id;
  p.pi = pi;
  p.delta_t = dt;
  p.season = season;
  p.label = label;
  p.t_center = kStart - std::int64_t(days_before_onset * double(kSecPerDay));
  return p;
}

}  // namespace

TEST_CASE("bin floors into half-open cells") {
  const GridSpec spec;
  CHECK(spec.ni() == 12);
  CHECK(spec.nj() == 50);

  const auto a = bin(1.2, 4.7, spec);
  CHECK(a.i == 2);
  CHECK(a.j == 19);
  CHECK_FALSE(a.clamped);

  const auto edge = bin(0.0, -5.0, spec);
  CHECK(edge.i == 0);
  CHECK(edge.j == 0);
  CHECK_FALSE(edge.clamped);

  const auto inner_edge = bin(0.5, -4.5, spec);  // exactly on a boundary goes up
  CHECK(inner_edge.i == 1);
  CHECK(inner_edge.j == 1);

  const auto clamped = bin(7.5, 25.0, spec);
  CHECK(clamped.clamped);
  CHECK(clamped.i == 11);
  CHECK(clamped.j == 49);

  const auto low = bin(-0.2, -9.0, spec);
  CHECK(low.clamped);
  CHECK(low.i == 0);
  CHECK(low.j == 0);
}

TEST_CASE("accumulate cell summaries") {
  std::map<std::string, Instant> onsets{{"bad", kStart}};

  SUBCASE("healthy-only cell has proportion zero") {
    const std::vector<LabeledPoint> pts{point("good", 3.1, 9.1, HiveClass::Healthy),
                                        point("good", 3.2, 9.2, HiveClass::Healthy)};
    const auto g = accumulate(pts, onsets);
    REQUIRE(g.cells.size() == 1);
    CHECK(g.cells[0].prop_collapsed == doctest::Approx(0.0));
    CHECK_FALSE(g.cells[0].mean_days_to_collapse.has_value());
  }
  SUBCASE("collapsed-only cell has proportion one") {
    const std::vector<LabeledPoint> pts{
        point("bad", 0.6, 2.1, HiveClass::EventuallyCollapsed),
        point("bad", 0.7, 2.2, HiveClass::EventuallyCollapsed)};
    const auto g = accumulate(pts, onsets);
    REQUIRE(g.cells.size() == 1);
    CHECK(g.cells[0].prop_collapsed == doctest::Approx(1.0));
  }
  SUBCASE("mean days to collapse averages point offsets") {
    const std::vector<LabeledPoint> pts{
        point("bad", 0.6, 2.1, HiveClass::EventuallyCollapsed, Season::Summer, 3.0),
        point("bad", 0.7, 2.2, HiveClass::EventuallyCollapsed, Season::Summer, 5.0)};
    const auto g = accumulate(pts, onsets);
    REQUIRE(g.cells.size() == 1);
    REQUIRE(g.cells[0].mean_days_to_collapse.has_value());
    CHECK(*g.cells[0].mean_days_to_collapse == doctest::Approx(4.0));
  }
  SUBCASE("a collapsed-class point without an onset is an error") {
    const std::vector<LabeledPoint> pts{point("other", 0.6, 2.1, HiveClass::EventuallyCollapsed)};
    CHECK_THROWS_AS(accumulate(pts, onsets), MissingOnset);
  }
  SUBCASE("dominant season and frequency") {
    const std::vector<LabeledPoint> pts{
        point("good", 2.1, 5.1, HiveClass::Healthy, Season::Summer),
        point("good", 2.2, 5.2, HiveClass::Healthy, Season::Summer),
        point("good", 2.3, 5.3, HiveClass::Healthy, Season::Autumn)};
    const auto g = accumulate(pts, onsets);
    REQUIRE(g.cells.size() == 1);
    CHECK(g.cells[0].dominant_season == Season::Summer);
    CHECK(g.cells[0].dominant_season_freq == doctest::Approx(2.0 / 3.0));
  }
}

TEST_CASE("grid conservation and permutation invariance") {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> upi(-1.0, 8.0), udt(-8.0, 24.0);
  std::uniform_int_distribution<int> usea(0, 3), ulab(0, 1);
  std::map<std::string, Instant> onsets{{"bad", kStart}};
  std::vector<LabeledPoint> pts;
  for (int i = 0; i < 2000; ++i) {
    const bool collapsed = ulab(rng) == 1;
    pts.push_back(point(collapsed ? "bad" : "good", upi(rng), udt(rng),
                        collapsed ? HiveClass::EventuallyCollapsed : HiveClass::Healthy,
                        Season(usea(rng)), double(i % 13)));
  }
  const auto g = accumulate(pts, onsets);
  std::size_t in_cells = 0;
  for (const auto& c : g.cells) {
    in_cells += c.n_total;
    CHECK(c.prop_collapsed >= 0.0);
    CHECK(c.prop_collapsed <= 1.0);
    std::size_t season_total = 0;
    for (const auto n : c.season_counts) season_total += n;
    CHECK(season_total == c.n_total);  // season frequencies sum to one
    CHECK(c.dominant_season_freq > 0.0);
    CHECK(c.dominant_season_freq <= 1.0);
  }
  CHECK(in_cells + g.clamped == pts.size());
  CHECK(g.total == pts.size());

  auto shuffled = pts;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto g2 = accumulate(shuffled, onsets);
  REQUIRE(g2.cells.size() == g.cells.size());
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    CHECK(g2.cells[i].i == g.cells[i].i);
    CHECK(g2.cells[i].j == g.cells[i].j);
    CHECK(g2.cells[i].n_total == g.cells[i].n_total);
    CHECK(g2.cells[i].prop_collapsed == doctest::Approx(g.cells[i].prop_collapsed));
    CHECK(g2.cells[i].dominant_season == g.cells[i].dominant_season);
  }
}

TEST_CASE("zone summary partitions by pi") {
  const StatusThresholds th;
  SUBCASE("all healthy points give ratio one in nonempty zones") {
    const std::vector<LabeledPoint> pts{point("good", 0.4, 5.0, HiveClass::Healthy),
                                        point("good", 2.0, 5.0, HiveClass::Healthy),
                                        point("good", 4.0, 5.0, HiveClass::Healthy)};
    const auto zones = zone_summary(pts, th);
    for (const auto& z : zones) {
      REQUIRE(z.healthy_ratio.has_value());
      CHECK(*z.healthy_ratio == doctest::Approx(1.0));
    }
  }
  SUBCASE("mixed zone ratio") {
    std::vector<LabeledPoint> pts;
    for (int i = 0; i < 3; ++i) pts.push_back(point("good", 2.0, 5.0, HiveClass::Healthy));
    pts.push_back(point("bad", 2.2, 5.0, HiveClass::EventuallyCollapsed));
    const auto zones = zone_summary(pts, th);
    CHECK(zones[1].zone == Status::Warning);
    CHECK(zones[1].n_points == 4);
    REQUIRE(zones[1].healthy_ratio.has_value());
    CHECK(*zones[1].healthy_ratio == doctest::Approx(0.75));
  }
  SUBCASE("empty zones report no ratio") {
    const std::vector<LabeledPoint> pts{point("good", 4.0, 5.0, HiveClass::Healthy)};
    const auto zones = zone_summary(pts, th);
    CHECK_FALSE(zones[0].healthy_ratio.has_value());
    CHECK_FALSE(zones[1].healthy_ratio.has_value());
    REQUIRE(zones[2].healthy_ratio.has_value());
  }
  SUBCASE("boundaries are half-open") {
    const std::vector<LabeledPoint> pts{point("good", 1.49, 5.0, HiveClass::Healthy),
                                        point("good", 1.5, 5.0, HiveClass::Healthy),
                                        point("good", 3.49, 5.0, HiveClass::Healthy),
                                        point("good", 3.5, 5.0, HiveClass::Healthy)};
    const auto zones = zone_summary(pts, th);
    CHECK(zones[0].n_points == 1);
    CHECK(zones[1].n_points == 2);
    CHECK(zones[2].n_points == 1);
  }
}

TEST_CASE("grid csv and json outputs carry the summaries") {
  std::map<std::string, Instant> onsets{{"bad", kStart}};
  const std::vector<LabeledPoint> pts{
      point("good", 3.1, 9.1, HiveClass::Healthy),
      point("bad", 0.6, 2.1, HiveClass::EventuallyCollapsed, Season::Autumn, 2.0)};
  const auto g = accumulate(pts, onsets);
  std::ostringstream csv;
  write_grid_csv(csv, g);
  CHECK(csv.str().find(kGridCsvHeader) == 0);
  CHECK(csv.str().find("autumn") != std::string::npos);

  const auto j = grid_json(g, zone_summary(pts, {}));
  CHECK(j.at("total_points") == 2);
  CHECK(j.at("cells").size() == 2);
  CHECK(j.at("zones").size() == 3);
}
