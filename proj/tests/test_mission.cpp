#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcamp/mission.hpp"
#include "rcamp/runner.hpp"
#include "rcamp/scenario.hpp"

using namespace rcamp;
using namespace rcamp::mission;
using nlohmann::json;

namespace {

json corridor_fixture() {
  return json::parse(R"({
    "name": "corridor",
    "seed": 3,
    "grid": {"cells": [80, 40], "resolution": 0.5},
    "aps": [
      {"id": "west", "position": [3, 10], "eta": 4},
      {"id": "east", "position": [37, 10], "eta": 4}
    ],
    "start": [4, 10],
    "goal": [36, 10],
    "max_ticks": 400
  })");
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / ("rcamp_test_" + name);
  std::filesystem::remove_all(d);
  return d;
}

std::vector<std::string> lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string s; std::getline(in, s);) out.push_back(s);
  return out;
}

std::vector<std::uint8_t> pgm_pixels(const std::filesystem::path& p, int& w, int& h) {
  std::ifstream in(p, std::ios::binary);
  std::string magic;
  in >> magic;
  REQUIRE(magic == "P5");
  auto skip = [&] {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string c;
      std::getline(in, c);
      in >> std::ws;
    }
  };
  int maxval = 0;
  skip();
  in >> w;
  skip();
  in >> h;
  skip();
  in >> maxval;
  in.get();
  REQUIRE(maxval == 255);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  REQUIRE(in.gcount() == static_cast<std::streamsize>(px.size()));
  return px;
}

}  // namespace

TEST_CASE("scenario validation names the offending field") {
  auto j = corridor_fixture();
  SUBCASE("missing aps") {
    j.erase("aps");
    try {
      parse_scenario(j);
      FAIL("expected a validation error");
    } catch (const ScenarioError& e) {
      CHECK(e.field() == "aps");
    }
  }
  SUBCASE("negative resolution") {
    j["grid"]["resolution"] = -1.0;
    CHECK_THROWS_AS(parse_scenario(j), ScenarioError);
  }
  SUBCASE("unknown field") {
    j["bogus"] = 1;
    try {
      parse_scenario(j);
      FAIL("expected a validation error");
    } catch (const ScenarioError& e) {
      CHECK(e.field() == "bogus");
    }
  }
  SUBCASE("start on a wall") {
    j["grid"]["regions"] = json::array({{{"rect", {3, 9, 5, 11}}, {"class", "wall"}}});
    try {
      parse_scenario(j);
      FAIL("expected a validation error");
    } catch (const ScenarioError& e) {
      CHECK(e.field() == "start");
    }
  }
  SUBCASE("event on an unknown AP") {
    j["events"] = json::array({{{"trigger_region", {0, 0, 1, 1}}, {"action", "ap_off"}, {"ap_id", "nope"}}});
    CHECK_THROWS_AS(parse_scenario(j), ScenarioError);
  }
}

TEST_CASE("resolved configuration round-trips") {
  const auto cfg = parse_scenario(corridor_fixture());
  const auto again = parse_scenario(to_json(cfg));
  CHECK(to_json(again) == to_json(cfg));
  CHECK(cfg.mission.dt == 0.2);
  CHECK(cfg.aps.size() == 2u);
}

TEST_CASE("recovery helpers") {
  RobotState s;
  s.start_position = {1, 2};
  CHECK(recovery_goal(s, std::nullopt) == Vec2(1, 2));
  CHECK(recovery_goal(s, Vec2(5, 5)) == Vec2(5, 5));

  ReconnectDetector d(5.0, 3);
  ConnectionMonitor m;
  m.threshold = -90.0;
  CHECK_FALSE(d.update(m, -80.0));
  CHECK_FALSE(d.update(m, -80.0));
  CHECK_FALSE(d.update(m, -86.0));
  CHECK(d.streak() == 0);
  CHECK_FALSE(d.update(m, -85.0));
  CHECK_FALSE(d.update(m, std::nullopt));
  CHECK_FALSE(d.update(m, -70.0));
  CHECK_FALSE(d.update(m, -70.0));
  CHECK(d.update(m, -70.0));
}

TEST_CASE("executor invariants along a run") {
  const auto cfg = parse_scenario(corridor_fixture());
  MissionExecutor ex(cfg, RunMode::rcamp);
  Vec2 prev = ex.state().position;
  CHECK(prev == cfg.start);
  int n = 0;
  while (!ex.finished() && n < cfg.mission.max_ticks) {
    const auto r = ex.tick();
    ++n;
    CHECK(distance(prev, r.position) <= cfg.mission.speed * cfg.mission.dt + 1e-9);
    CHECK(ex.mask().contains(r.position));
    if (!r.connected && r.filt_rss) CHECK(*r.filt_rss < cfg.mission.connection_threshold);
    if (r.connected) CHECK(r.ap_id.has_value());
    CHECK(r.window_size <= r.window_cap);
    prev = r.position;
  }
  CHECK(ex.outcome() == Outcome::goal_reached);
  CHECK(distance(ex.state().position, *cfg.goal) <= 1.0);
}

TEST_CASE("disconnected rows stay below threshold in a lossy run") {
  auto j = corridor_fixture();
  j["aps"] = json::array({{{"id", "only"}, {"position", {3, 10}}, {"eta", 4}}});
  j["max_ticks"] = 300;
  const auto cfg = parse_scenario(j);
  const auto a = run(cfg, RunMode::baseline);
  int lost = 0;
  for (const auto& r : a.ticks) {
    if (!r.connected) {
      ++lost;
      if (r.filt_rss) CHECK(*r.filt_rss < cfg.mission.connection_threshold);
    }
  }
  CHECK(lost > 0);
}

TEST_CASE("no goal and no script ends immediately") {
  auto j = corridor_fixture();
  j.erase("goal");
  const auto a = run(parse_scenario(j), RunMode::rcamp);
  CHECK(a.outcome == Outcome::goal_reached);
  CHECK(a.ticks.size() <= 1u);
}

TEST_CASE("artifacts") {
  SUBCASE("zero ticks writes headers only") {
    auto j = corridor_fixture();
    j["max_ticks"] = 0;
    const auto a = run(parse_scenario(j), RunMode::rcamp, 10);
    const auto dir = fresh_dir("zero");
    write_artifacts(a, dir);
    CHECK(lines(dir / "rss.csv").size() == 1u);
    CHECK(lines(dir / "path.csv").size() == 1u);
    CHECK(lines(dir / "rss.csv")[0] == "tick,time_s,x_m,y_m,raw_rss_dbm,filt_rss_dbm,ap_id,connected,mode");
    std::ifstream in(dir / "summary.json");
    const auto s = json::parse(in);
    CHECK(s["ticks"] == 0);
    CHECK(s["outcome"] == "max_ticks");
    std::filesystem::remove_all(dir);
  }
  SUBCASE("one row per tick") {
    auto j = corridor_fixture();
    j["max_ticks"] = 100;
    j["goal"] = {36, 10};
    const auto a = run(parse_scenario(j), RunMode::rcamp);
    REQUIRE(a.ticks.size() == 100u);
    const auto dir = fresh_dir("hundred");
    write_artifacts(a, dir);
    CHECK(lines(dir / "rss.csv").size() == 101u);
    CHECK(lines(dir / "path.csv").size() == 101u);
    CHECK(lines(dir / "grf.csv").size() == 101u);
    std::filesystem::remove_all(dir);
  }
  SUBCASE("mean image is darker near an access point") {
    const auto cfg = parse_scenario(corridor_fixture());
    const auto a = run(cfg, RunMode::rcamp, 20);
    REQUIRE_FALSE(a.dumps.empty());
    const auto dir = fresh_dir("pgm");
    write_artifacts(a, dir);
    char name[64];
    std::snprintf(name, sizeof(name), "field_%04d_mean.pgm", a.dumps.back().tick);
    int w = 0;
    int h = 0;
    const auto px = pgm_pixels(dir / name, w, h);
    CHECK(w == a.query_grid.nx);
    CHECK(h == a.query_grid.ny);
    auto gray_at = [&](const Vec2& p) {
      const auto k = a.query_grid.nearest(p);
      const int ix = static_cast<int>(k % static_cast<std::size_t>(w));
      const int iy = static_cast<int>(k / static_cast<std::size_t>(w));
      return px[static_cast<std::size_t>(h - 1 - iy) * w + ix];
    };
    CHECK(gray_at({5, 10}) < gray_at({20, 10}));
    CHECK(gray_at({35, 10}) < gray_at({20, 10}));
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("gray mappings") {
  CHECK(mean_to_gray(-30, -95, -30) == 0);
  CHECK(mean_to_gray(-95, -95, -30) == 255);
  CHECK(mean_to_gray(-200, -95, -30) == 255);
  CHECK(variance_to_gray(0, 4) == 0);
  CHECK(variance_to_gray(4, 4) == 255);
  CHECK(variance_to_gray(2, 4) == 128);
}

TEST_CASE("bundled scenarios load") {
  for (const char* name : {"scenario1", "scenario2", "scenario3", "scenario3_all_off"}) {
    CAPTURE(name);
    const auto cfg = load_scenario(std::filesystem::path(RCAMP_SCENARIO_DIR) / (std::string(name) + ".json"));
    CHECK(cfg.name == name);
  }
}
