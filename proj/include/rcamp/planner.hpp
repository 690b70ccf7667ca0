#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rcamp/geometry.hpp"
#include "rcamp/grf.hpp"
#include "rcamp/rng.hpp"
#include "rcamp/trav_map.hpp"

namespace rcamp::planner {

struct PlannerConfig {
  double lambda_t = 1.0;
  double lambda_r = 0.0;
  double tau = 2.0;       // s, decay of the RSS factor
  double epsilon = 1e-6;
  double rss_min = -95.0;  // dBm
  double rss_max = -30.0;  // dBm
  double trav_min = 0.0;
  double trav_max = 10.0;
  double timeout = 5.0;  // s
  std::size_t max_expansions = 20000;
  std::uint64_t seed = 0;
  double local_radius = 4.0;  // m
  std::size_t branching = 8;  // children sampled per expansion
  double max_step = 4.0;      // m, cap on the expansion ball radius
  double goal_tolerance_cells = 1.5;
  bool deterministic_time = true;  // t = expansions / max_expansions * timeout
  double connect_rss = -90.0;      // dBm, only for Path::connected_fraction

  void validate() const;
};

/// Snapshot of a WMG prediction on a lattice, looked up by nearest point.
struct RssField {
  grf::QueryGrid grid;
  Eigen::VectorXd mean;
  Eigen::VectorXd confidence;

  RssField() = default;
  RssField(grf::QueryGrid g, const grf::Prediction& p);

  struct Sample {
    double rss;
    double confidence;
  };
  Sample at(const Vec2& p) const;
};

double pi_trav(double trav, const PlannerConfig& cfg);
double pi_rss(double rss, double alpha_r, double t, const PlannerConfig& cfg);

/// (d(from,to) + h(to,goal)) * pi_trav(to) * pi_rss(to).
double edge_cost(const Vec2& from, const Vec2& to, const Vec2& goal, double t, const PlannerConfig& cfg,
                 double trav, double rss, double alpha_r);

/// Edge cost with the RSS factor disabled (field not available yet).
double edge_cost(const Vec2& from, const Vec2& to, const Vec2& goal, const PlannerConfig& cfg, double trav);

struct PlanNode {
  Vec2 position = Vec2::Zero();
  trav::CellIndex cell;
  std::optional<std::size_t> parent;
  double g_cost = 0.0;
  double clearance = 0.0;
  double rss_pred = 0.0;
  double rss_conf = 0.0;
};

struct Path {
  std::vector<Vec2> waypoints;
  std::vector<double> edge_costs;
  double total_cost = 0.0;
  double connected_fraction = 0.0;
};

enum class PlanStatus { ok, unreachable, timeout };
std::string_view to_string(PlanStatus s);

struct PlanResult {
  PlanStatus status = PlanStatus::unreachable;
  Path path;
  std::size_t expansions = 0;

  bool ok() const { return status == PlanStatus::ok; }
};

/// Cells already present in the search tree.
class VisitedIndex {
 public:
  VisitedIndex(int nx, int ny) : nx_(nx), bits_(static_cast<std::size_t>(nx) * ny, 0) {}
  bool test(const trav::CellIndex& c) const { return bits_[flat(c)] != 0; }
  void set(const trav::CellIndex& c) { bits_[flat(c)] = 1; }

 private:
  std::size_t flat(const trav::CellIndex& c) const { return static_cast<std::size_t>(c.iy) * nx_ + c.ix; }
  int nx_;
  std::vector<std::uint8_t> bits_;
};

/// Weighted sampling of up to k distinct indices, successive draws proportional
/// to the remaining weights (Efraimidis-Spirakis keys). Returns indices in
/// draw order; zero-weight entries are never drawn.
std::vector<std::size_t> weighted_sample_without_replacement(std::span<const double> weights, std::size_t k,
                                                             Rng& rng);

/// Expansion ball radius: clearance floored at two cells and capped at max_step.
double neighborhood_radius(double clearance, double resolution, const PlannerConfig& cfg);

struct ExpandResult {
  std::vector<trav::CellIndex> children;
  bool exhausted = true;  // false when unvisited candidates remain after sampling
};

/// Samples children of `node` from the unvisited traversable cells inside
/// its clearance ball, with probability proportional to 1/(trav + eps).
/// `region` optionally restricts candidates (centre, radius); `goal_cell` is
/// always taken when it is a valid candidate.
ExpandResult expand(const PlanNode& node, const trav::TraversableMask& mask, const VisitedIndex& visited,
                    Rng& rng, const PlannerConfig& cfg, std::optional<std::pair<Vec2, double>> region = {},
                    std::optional<trav::CellIndex> goal_cell = {});

PlanResult plan_global(const Vec2& start, const Vec2& goal, const trav::TraversableMask& mask,
                       const RssField* field, const PlannerConfig& cfg);

/// Same search restricted to cells within cfg.local_radius of `current`.
/// Targets `next_waypoint`, or its projection onto the radius when outside.
PlanResult plan_local(const Vec2& current, const Vec2& next_waypoint, const trav::TraversableMask& mask,
                      const RssField* field, const PlannerConfig& cfg);

/// Length of a polyline in meters.
double path_length(std::span<const Vec2> waypoints);

}  // namespace rcamp::planner
