#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcamp/grf.hpp"
#include "rcamp/mission.hpp"
#include "rcamp/scenario.hpp"

namespace rcamp {

struct FieldDump {
  int tick = 0;
  grf::Prediction prediction;
};

struct RunArtifacts {
  ScenarioConfig config;
  mission::RunMode mode = mission::RunMode::rcamp;
  std::vector<mission::TickRecord> ticks;
  std::vector<FieldDump> dumps;
  grf::QueryGrid query_grid;
  mission::Outcome outcome = mission::Outcome::max_ticks;
  mission::PlannerStats planner_stats;
  int recoveries = 0;
  grf::Hyperparams final_hyperparams;
  Vec2 final_position = Vec2::Zero();

  nlohmann::json summary() const;
};

/// Runs the tick loop to completion. `dump_every` > 0 stores the predicted
/// field every that many ticks once the map generator is ready.
RunArtifacts run(const ScenarioConfig& cfg, mission::RunMode mode, int dump_every = 0);

/// Gray level for a mean RSS value: high signal is dark.
std::uint8_t mean_to_gray(double rss, double rss_min, double rss_max);
/// Gray level for a variance value: high uncertainty is bright.
std::uint8_t variance_to_gray(double variance, double variance_max);

/// Writes rss.csv, path.csv, grf.csv, field_NNNN_{mean,var}.pgm and summary.json.
void write_artifacts(const RunArtifacts& a, const std::filesystem::path& dir);

}  // namespace rcamp
