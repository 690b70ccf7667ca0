#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcamp/geometry.hpp"
#include "rcamp/grf.hpp"
#include "rcamp/planner.hpp"
#include "rcamp/radio.hpp"
#include "rcamp/scenario.hpp"
#include "rcamp/trav_map.hpp"

namespace rcamp::mission {

enum class Mode { executing, recovering, teleop, idle };
enum class LinkStatus { connected, lost };
enum class RunMode { rcamp, baseline };
enum class Outcome { running, goal_reached, unreachable, unrecovered, max_ticks };

std::string_view to_string(Mode m);
std::string_view to_string(RunMode m);
std::string_view to_string(Outcome o);
std::optional<RunMode> parse_run_mode(std::string_view s);

struct RobotState {
  Vec2 position = Vec2::Zero();
  double speed = 0.6;  // m/s
  Vec2 start_position = Vec2::Zero();
  Mode mode = Mode::idle;
};

struct ConnectionMonitor {
  LinkStatus status = LinkStatus::connected;
  double threshold = -90.0;
  std::optional<double> lost_since;
  std::optional<std::string> last_ap;
};

/// Where to head after a connection loss when no mission goal exists.
Vec2 recovery_goal(const RobotState& state, const std::optional<Vec2>& known_ap);

/// Recovery ends after `hold_ticks` consecutive filtered readings at or above
/// threshold + margin.
class ReconnectDetector {
 public:
  ReconnectDetector(double margin_db = 5.0, int hold_ticks = 3) : margin_(margin_db), hold_(hold_ticks) {}

  bool update(const ConnectionMonitor& monitor, std::optional<double> filtered_rss);
  void reset() { streak_ = 0; }
  int streak() const { return streak_; }

 private:
  double margin_;
  int hold_;
  int streak_ = 0;
};

/// One row of the per-tick trace.
struct TickRecord {
  int tick = 0;
  double time = 0.0;
  Vec2 position = Vec2::Zero();
  std::optional<double> raw_rss;
  std::optional<double> filt_rss;
  std::optional<std::string> ap_id;
  bool connected = false;
  Mode mode = Mode::idle;
  std::size_t window_size = 0;
  std::size_t window_cap = 0;
  bool grf_ready = false;
  bool reoptimized = false;
};

struct PlannerStats {
  int global_plans = 0;
  int global_failures = 0;
  int local_plans = 0;
  int local_failures = 0;
};

/// Closed-loop executor for one scenario run.
class MissionExecutor {
 public:
  MissionExecutor(const ScenarioConfig& cfg, RunMode mode);

  /// One control cycle: sense, filter, associate, learn, replan, move.
  TickRecord tick(double dt);
  TickRecord tick() { return tick(cfg_.mission.dt); }

  bool finished() const { return outcome_ != Outcome::running; }
  Outcome outcome() const { return outcome_; }
  int ticks() const { return tick_; }

  const RobotState& state() const { return state_; }
  const ConnectionMonitor& monitor() const { return monitor_; }
  const grf::GrfMapper& mapper() const { return mapper_; }
  const std::vector<radio::AccessPoint>& access_points() const { return aps_; }
  const trav::TraversableMask& mask() const { return mask_; }
  const planner::Path& global_path() const { return global_path_; }
  const PlannerStats& planner_stats() const { return stats_; }
  const grf::QueryGrid& query_grid() const { return query_grid_; }
  std::optional<Vec2> active_goal() const;
  int recovery_count() const { return recoveries_; }

  /// Posterior on the query lattice, if the map generator is ready.
  std::optional<grf::Prediction> current_prediction() const;

  /// Replace the traversable map (dynamic obstacles). Forces a global replan.
  void set_mask(trav::TraversableMask mask);

 private:
  void fire_events(const Vec2& pos);
  void enter_recovery();
  void finish(Outcome o);
  planner::PlannerConfig planner_config(std::uint64_t salt) const;
  void refresh_field();
  bool replan_global(const Vec2& goal);
  void advance(double step);
  Vec2 local_target(const Vec2& goal);

  ScenarioConfig cfg_;
  RunMode run_mode_;
  trav::TraversableMask mask_;
  std::vector<radio::AccessPoint> aps_;
  std::vector<radio::EwmaState> filters_;
  std::vector<bool> event_fired_;

  RobotState state_;
  ConnectionMonitor monitor_;
  ReconnectDetector detector_;
  grf::GrfMapper mapper_;
  grf::QueryGrid query_grid_;
  std::optional<planner::RssField> field_;
  int field_age_ = 0;

  std::optional<std::string> current_ap_;
  Vec2 last_position_;
  std::optional<Vec2> planned_goal_;
  planner::Path global_path_;
  std::size_t global_index_ = 1;
  int since_global_ = 0;
  bool force_global_ = true;
  std::size_t teleop_index_ = 0;
  planner::Path local_path_;

  int tick_ = 0;
  double time_ = 0.0;
  int recoveries_ = 0;
  PlannerStats stats_;
  Outcome outcome_ = Outcome::running;
};

}  // namespace rcamp::mission
