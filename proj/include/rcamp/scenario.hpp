#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcamp/geometry.hpp"
#include "rcamp/grf.hpp"
#include "rcamp/planner.hpp"
#include "rcamp/radio.hpp"
#include "rcamp/trav_map.hpp"

namespace rcamp {

/// Validation failure; `field()` is a JSON path such as "aps[1].position".
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct GridRegion {
  Rect rect;
  trav::TravCell cell;
};

struct GridSpec {
  int nx = 0;
  int ny = 0;
  double resolution = 0.5;
  Vec2 origin = Vec2::Zero();
  trav::TravCell fill;
  std::vector<GridRegion> regions;  // applied in order, later wins
  double clearance_min = 0.0;
  bool boundary_is_obstacle = false;
  trav::TravWeights weights;
};

trav::TravGrid build_grid(const GridSpec& spec);

struct ApEvent {
  enum class Action { ap_off, ap_on };
  Rect trigger_region;
  Action action = Action::ap_off;
  std::string ap_id;
};

struct GrfSettings {
  grf::GrfMapper::Config mapper;
  double query_resolution = 1.0;  // m
  int predict_every = 5;          // ticks between posterior refreshes
};

struct MissionSettings {
  double dt = 0.2;       // s
  double speed = 0.6;    // m/s
  int max_ticks = 3000;
  double ewma_alpha = 0.3;
  double connection_threshold = -90.0;  // dBm
  double noise_floor = -100.0;          // dBm, ingested when nothing is heard
  double recovery_margin_db = 5.0;
  int recovery_hold_ticks = 3;
  double recovery_lambda_r_gain = 2.0;
  bool baseline_uses_recovery_goal = true;
  int global_replan_every = 25;  // ticks
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  GridSpec grid;
  std::vector<radio::AccessPoint> aps;
  Vec2 start = Vec2::Zero();
  std::optional<Vec2> goal;
  std::optional<Vec2> known_ap;
  std::vector<ApEvent> events;
  std::optional<std::vector<Vec2>> teleop_script;
  planner::PlannerConfig planner;
  GrfSettings grf;
  MissionSettings mission;
};

/// Parses and validates; missing optional fields take their defaults.
ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Fully resolved configuration, defaults included.
nlohmann::json to_json(const ScenarioConfig& cfg);

}  // namespace rcamp
