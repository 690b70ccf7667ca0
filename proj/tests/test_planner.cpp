#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rcamp/planner.hpp"
#include "rcamp/rng.hpp"
#include "rcamp_oracle/grid_dijkstra.hpp"

using namespace rcamp;
using namespace rcamp::planner;
using trav::CellIndex;

namespace {

trav::TraversableMask open_mask(int n, double res = 1.0) {
  trav::TravGrid g(n, n, res);
  g.compute_clearance();
  g.compute_costs(trav::TravWeights{});
  return {g, 0.0};
}

trav::TraversableMask cluttered_mask(int n, std::uint64_t seed) {
  trav::TravGrid g(n, n, 1.0);
  Rng rng(seed);
  for (int k = 0; k < 12; ++k) {
    const double x = rng.uniform(4, n - 8);
    const double y = rng.uniform(4, n - 8);
    g.fill_rect({x, y, x + rng.uniform(1, 6), y + rng.uniform(1, 6)}, {trav::CellClass::wall, 0, 0});
  }
  g.compute_clearance();
  g.compute_costs(trav::TravWeights{});
  return {g, 0.0};
}

PlannerConfig plain(std::uint64_t seed) {
  PlannerConfig c;
  c.lambda_t = 0.0;
  c.lambda_r = 0.0;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("edge cost algebra") {
  PlannerConfig c;
  c.lambda_t = 0;
  c.lambda_r = 0;
  CHECK(edge_cost({0, 0}, {3, 4}, {3, 10}, 0.0, c, 7.0, -90.0, 1.0) == 5.0 + 6.0);

  c = {};
  c.lambda_r = 5;
  CHECK(pi_rss(c.rss_max, 1.0, 0.0, c) == 1.0);
  CHECK(std::abs(pi_rss(c.rss_min, 1.0, 100.0 * c.tau, c) - 1.0) <= 1e-9);
  CHECK(pi_rss(c.rss_min, 1.0, 0.0, c) == doctest::Approx(1.0 + 5.0).epsilon(1e-6));
  CHECK(pi_trav(c.trav_min, c) == 1.0);
}

TEST_CASE("edge cost is monotone in rss and trav") {
  PlannerConfig c;
  c.lambda_t = 2;
  c.lambda_r = 3;
  Rng rng(1);
  for (int i = 0; i < 5000; ++i) {
    const Vec2 a(rng.uniform(0, 10), rng.uniform(0, 10));
    const Vec2 b(rng.uniform(0, 10), rng.uniform(0, 10));
    const Vec2 goal(rng.uniform(0, 10), rng.uniform(0, 10));
    const double t = rng.uniform(0, 5);
    const double alpha = rng.uniform();
    const double rss = rng.uniform(-95, -30);
    const double trav = rng.uniform(0, 10);
    const double base = edge_cost(a, b, goal, t, c, trav, rss, alpha);
    CHECK(edge_cost(a, b, goal, t, c, trav, rss + 1.0, alpha) <= base);
    CHECK(edge_cost(a, b, goal, t, c, trav + 0.5, rss, alpha) >= base);
    CHECK(base >= distance(a, b) + distance(b, goal) - 1e-12);
  }
}

TEST_CASE("weighted sampling follows inverse-cost weights") {
  Rng rng(123);
  const std::vector<double> w{1.0 / 1.0, 1.0 / 3.0};
  int first = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) first += weighted_sample_without_replacement(w, 1, rng)[0] == 0;
  CHECK(static_cast<double>(first) / n == doctest::Approx(0.75).epsilon(0.02));

  const std::vector<double> uniform(4, 1.0);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 40000; ++i) ++counts[weighted_sample_without_replacement(uniform, 1, rng)[0]];
  for (int c : counts) CHECK(c / 40000.0 == doctest::Approx(0.25).epsilon(0.05));

  const std::vector<double> with_zero{1.0, 0.0, 2.0};
  for (int i = 0; i < 1000; ++i) {
    const auto d = weighted_sample_without_replacement(with_zero, 3, rng);
    CHECK(d.size() == 2u);
    CHECK(std::find(d.begin(), d.end(), 1u) == d.end());
  }
}

TEST_CASE("neighbourhood radius") {
  PlannerConfig c;
  CHECK(neighborhood_radius(0.1, 0.5, c) == 1.0);
  CHECK(neighborhood_radius(2.5, 0.5, c) == 2.5);
  CHECK(neighborhood_radius(std::numeric_limits<double>::infinity(), 0.5, c) == c.max_step);
}

TEST_CASE("expansion samples only unvisited traversable cells in the ball") {
  const auto m = open_mask(20);
  VisitedIndex visited(m.nx(), m.ny());
  Rng rng(2);
  PlannerConfig c;
  PlanNode n;
  n.cell = {10, 10};
  n.position = m.center(n.cell);
  n.clearance = 3.0;
  visited.set(n.cell);
  visited.set({11, 10});
  const auto r = expand(n, m, visited, rng, c);
  CHECK(r.children.size() == c.branching);
  for (const auto& ch : r.children) {
    CHECK(m.contains(ch.ix, ch.iy));
    CHECK_FALSE(ch == CellIndex{11, 10});
    CHECK(distance(m.center(ch), n.position) <= 3.0 + 1e-9);
  }
}

TEST_CASE("start equals goal and separated components") {
  const auto m = open_mask(10);
  const auto same = plan_global({2.5, 2.5}, {2.5, 2.5}, m, nullptr, plain(0));
  REQUIRE(same.ok());
  CHECK(same.path.waypoints.size() == 1u);
  CHECK(same.path.total_cost == 0.0);

  trav::TravGrid g(12, 12, 1.0);
  g.fill_rect({5.0, 0.0, 6.0, 12.0}, {trav::CellClass::wall, 0, 0});
  g.compute_clearance();
  g.compute_costs(trav::TravWeights{});
  const trav::TraversableMask split(g, 0.0);
  const auto r = plan_global({1.5, 6.5}, {10.5, 6.5}, split, nullptr, plain(0));
  CHECK(r.status == PlanStatus::unreachable);
}

TEST_CASE("timeout is distinct from unreachable") {
  const auto m = open_mask(40);
  auto c = plain(3);
  c.max_expansions = 3;
  const auto r = plan_global({0.5, 0.5}, {39.5, 39.5}, m, nullptr, c);
  CHECK(r.status == PlanStatus::timeout);
}

TEST_CASE("returned paths are consistent and stay on the mask") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = cluttered_mask(40, seed);
    auto c = plain(seed);
    c.lambda_t = 1.0;
    const auto r = plan_global({1.5, 1.5}, {38.5, 38.5}, m, nullptr, c);
    REQUIRE(r.ok());
    const auto& p = r.path;
    CHECK(p.edge_costs.size() + 1 == p.waypoints.size());
    double sum = 0.0;
    for (double e : p.edge_costs) sum += e;
    CHECK(std::abs(sum - p.total_cost) <= 1e-9 * std::max(1.0, sum));
    for (std::size_t i = 1; i < p.waypoints.size(); ++i) {
      CHECK(m.contains(p.waypoints[i]));
      CHECK(m.segment_free(p.waypoints[i - 1], p.waypoints[i]));
      CHECK(distance(p.waypoints[i - 1], p.waypoints[i]) <= c.max_step + 1e-9);
    }
  }
}

TEST_CASE("equal seeds give identical paths") {
  const auto m = cluttered_mask(40, 5);
  const auto a = plan_global({1.5, 1.5}, {38.5, 30.5}, m, nullptr, plain(9));
  const auto b = plan_global({1.5, 1.5}, {38.5, 30.5}, m, nullptr, plain(9));
  REQUIRE(a.ok());
  REQUIRE(a.path.waypoints.size() == b.path.waypoints.size());
  for (std::size_t i = 0; i < a.path.waypoints.size(); ++i) CHECK(a.path.waypoints[i] == b.path.waypoints[i]);
}

TEST_CASE("path length stays close to the grid shortest path") {
  std::vector<double> ratios;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = cluttered_mask(40, seed + 50);
    const auto sc = m.nearest_free({1.5, 1.5});
    const auto gc = m.nearest_free({38.5, 38.5});
    const auto ref = oracle::grid_shortest_path(m, *sc, *gc);
    REQUIRE(ref);
    const auto r = plan_global(m.center(*sc), m.center(*gc), m, nullptr, plain(seed));
    REQUIRE(r.ok());
    ratios.push_back(path_length(r.path.waypoints) / *ref);
  }
  std::nth_element(ratios.begin(), ratios.begin() + 10, ratios.end());
  CHECK(ratios[10] <= 1.3);
}

TEST_CASE("local planner") {
  const auto m = open_mask(30, 0.5);
  auto c = plain(1);
  SUBCASE("target inside the radius") {
    const auto r = plan_local({5.25, 5.25}, {7.25, 5.25}, m, nullptr, c);
    REQUIRE(r.ok());
    CHECK(path_length(r.path.waypoints) <= 2.0 * 1.3);
    CHECK(distance(r.path.waypoints.back(), {7.25, 5.25}) <= c.goal_tolerance_cells * m.resolution());
  }
  SUBCASE("target outside the radius is projected") {
    const auto r = plan_local({2.25, 7.25}, {14.25, 7.25}, m, nullptr, c);
    REQUIRE(r.ok());
    for (const auto& w : r.path.waypoints) CHECK(distance(w, {2.25, 7.25}) <= c.local_radius + 1e-9);
    CHECK(r.path.waypoints.back().x() > 2.25 + c.local_radius - 1.0);
  }
  SUBCASE("new obstacle forces a detour") {
    trav::TravGrid g(30, 30, 0.5);
    g.fill_rect({6.0, 4.0, 6.5, 10.0}, {trav::CellClass::wall, 0, 0});
    g.compute_clearance();
    g.compute_costs(trav::TravWeights{});
    const trav::TraversableMask blocked(g, 0.0);
    const auto r = plan_local({4.75, 7.25}, {8.25, 7.25}, blocked, nullptr, c);
    REQUIRE(r.ok());
    for (std::size_t i = 1; i < r.path.waypoints.size(); ++i) {
      CHECK(blocked.segment_free(r.path.waypoints[i - 1], r.path.waypoints[i]));
    }
  }
}

TEST_CASE("the RSS term steers around a weak region") {
  trav::TravGrid g(40, 20, 1.0);
  g.compute_clearance();
  g.compute_costs(trav::TravWeights{});
  const trav::TraversableMask m(g, 0.0);
  const auto q = grf::QueryGrid::covering(m.bounds(), 1.0);
  grf::Prediction p;
  p.mean.resize(static_cast<Eigen::Index>(q.size()));
  p.variance.setZero(static_cast<Eigen::Index>(q.size()));
  p.confidence.setOnes(static_cast<Eigen::Index>(q.size()));
  for (std::size_t k = 0; k < q.size(); ++k) {
    const Vec2 x = q.point(k);
    p.mean[static_cast<Eigen::Index>(k)] = (x.y() < 12.0 && x.x() > 12 && x.x() < 28) ? -95.0 : -40.0;
  }
  const RssField field(q, p);
  auto c = plain(4);
  c.lambda_r = 10.0;
  c.rss_max = -40.0;
  int avoided = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    c.seed = s;
    const auto r = plan_global({2.5, 5.5}, {37.5, 5.5}, m, &field, c);
    REQUIRE(r.ok());
    bool weak = false;
    for (const auto& w : r.path.waypoints) weak |= field.at(w).rss < -90.0;
    avoided += !weak;
  }
  CHECK(avoided >= 8);
}
