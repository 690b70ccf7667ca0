#include "rcamp/mission.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rcamp/rng.hpp"

namespace rcamp::mission {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::executing: return "executing";
    case Mode::recovering: return "recovering";
    case Mode::teleop: return "teleop";
    case Mode::idle: return "idle";
  }
  return "idle";
}

std::string_view to_string(RunMode m) { return m == RunMode::rcamp ? "rcamp" : "baseline"; }

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::running: return "running";
    case Outcome::goal_reached: return "goal_reached";
    case Outcome::unreachable: return "unreachable";
    case Outcome::unrecovered: return "unrecovered";
    case Outcome::max_ticks: return "max_ticks";
  }
  return "running";
}

std::optional<RunMode> parse_run_mode(std::string_view s) {
  if (s == "rcamp") return RunMode::rcamp;
  if (s == "baseline") return RunMode::baseline;
  return std::nullopt;
}

Vec2 recovery_goal(const RobotState& state, const std::optional<Vec2>& known_ap) {
  return known_ap ? *known_ap : state.start_position;
}

bool ReconnectDetector::update(const ConnectionMonitor& monitor, std::optional<double> filtered_rss) {
  if (filtered_rss && *filtered_rss >= monitor.threshold + margin_) {
    ++streak_;
  } else {
    streak_ = 0;
  }
  return streak_ >= hold_;
}

// ---------------------------------------------------------------------------

MissionExecutor::MissionExecutor(const ScenarioConfig& cfg, RunMode mode)
    : cfg_(cfg),
      run_mode_(mode),
      mask_(build_grid(cfg.grid), cfg.grid.clearance_min),
      aps_(cfg.aps),
      detector_(cfg.mission.recovery_margin_db, cfg.mission.recovery_hold_ticks),
      mapper_(cfg.grf.mapper),
      query_grid_(grf::QueryGrid::covering(mask_.bounds(), cfg.grf.query_resolution)),
      last_position_(cfg.start) {
  filters_.assign(aps_.size(), radio::EwmaState{cfg.mission.ewma_alpha, std::nullopt});
  event_fired_.assign(cfg.events.size(), false);
  state_.position = cfg.start;
  state_.start_position = cfg.start;
  state_.speed = cfg.mission.speed;
  monitor_.threshold = cfg.mission.connection_threshold;
  if (cfg.teleop_script && !cfg.teleop_script->empty()) {
    state_.mode = Mode::teleop;
  } else if (cfg.goal) {
    state_.mode = Mode::executing;
  } else {
    state_.mode = Mode::idle;
  }
}

std::optional<Vec2> MissionExecutor::active_goal() const {
  switch (state_.mode) {
    case Mode::teleop:
      if (cfg_.teleop_script && teleop_index_ < cfg_.teleop_script->size()) return (*cfg_.teleop_script)[teleop_index_];
      return std::nullopt;
    case Mode::executing:
      return cfg_.goal;
    case Mode::recovering:
      if (cfg_.goal) return cfg_.goal;
      if (run_mode_ == RunMode::rcamp || cfg_.mission.baseline_uses_recovery_goal) {
        return recovery_goal(state_, cfg_.known_ap);
      }
      return std::nullopt;
    case Mode::idle:
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<grf::Prediction> MissionExecutor::current_prediction() const {
  if (!mapper_.ready()) return std::nullopt;
  return mapper_.predict(query_grid_);
}

void MissionExecutor::set_mask(trav::TraversableMask mask) {
  mask_ = std::move(mask);
  force_global_ = true;
}

void MissionExecutor::fire_events(const Vec2& pos) {
  for (std::size_t i = 0; i < cfg_.events.size(); ++i) {
    const auto& e = cfg_.events[i];
    if (event_fired_[i] || !e.trigger_region.contains(pos)) continue;
    event_fired_[i] = true;
    for (auto& ap : aps_) {
      if (ap.id == e.ap_id) ap.active = e.action == ApEvent::Action::ap_on;
    }
  }
}

void MissionExecutor::enter_recovery() {
  state_.mode = Mode::recovering;
  detector_.reset();
  ++recoveries_;
  force_global_ = true;
  if (!active_goal()) finish(Outcome::unrecovered);
}

void MissionExecutor::finish(Outcome o) {
  outcome_ = o;
  state_.mode = Mode::idle;
}

planner::PlannerConfig MissionExecutor::planner_config(std::uint64_t salt) const {
  auto pc = cfg_.planner;
  pc.seed = hash_combine(cfg_.seed, salt);
  if (run_mode_ == RunMode::baseline || state_.mode == Mode::teleop) {
    pc.lambda_r = 0.0;
  } else if (state_.mode == Mode::recovering) {
    pc.lambda_r *= cfg_.mission.recovery_lambda_r_gain;
  }
  return pc;
}

void MissionExecutor::refresh_field() {
  if (run_mode_ == RunMode::baseline || !mapper_.ready()) {
    field_.reset();
    return;
  }
  field_.emplace(query_grid_, mapper_.predict(query_grid_));
  field_age_ = 0;
}

bool MissionExecutor::replan_global(const Vec2& goal) {
  refresh_field();
  const auto pc = planner_config(static_cast<std::uint64_t>(tick_) * 2);
  const auto result = planner::plan_global(state_.position, goal, mask_, field_ ? &*field_ : nullptr, pc);
  ++stats_.global_plans;
  since_global_ = 0;
  force_global_ = false;
  if (result.ok()) {
    global_path_ = result.path;
    global_index_ = 1;
    planned_goal_ = goal;
    return true;
  }
  if (result.status == planner::PlanStatus::unreachable) {
    finish(Outcome::unreachable);
    return false;
  }
  ++stats_.global_failures;
  if (!planned_goal_ || (*planned_goal_ - goal).norm() > 0.0) global_path_ = {};
  return false;
}

Vec2 MissionExecutor::local_target(const Vec2& goal) {
  const auto& wp = global_path_.waypoints;
  const double tol = cfg_.planner.goal_tolerance_cells * mask_.resolution();
  const Vec2& pos = state_.position;
  for (std::size_t k = global_index_; k < wp.size(); ++k) {
    if (distance(pos, wp[k]) <= tol) global_index_ = k + 1;
  }
  if (global_index_ >= wp.size()) return mask_.contains(goal) ? goal : wp.back();
  std::size_t j = global_index_;
  while (j + 1 < wp.size() && distance(pos, wp[j + 1]) <= cfg_.planner.local_radius) ++j;
  return wp[j];
}

void MissionExecutor::advance(double step) {
  const auto goal = active_goal();
  if (!goal) return;
  const bool goal_changed = !planned_goal_ || (*planned_goal_ - *goal).norm() > 0.0;
  if (force_global_ || goal_changed || global_path_.waypoints.empty() ||
      since_global_ >= cfg_.mission.global_replan_every) {
    replan_global(*goal);
  }
  if (finished() || global_path_.waypoints.empty()) return;

  if (field_ && field_age_ >= cfg_.grf.predict_every) refresh_field();
  if (!field_ && run_mode_ == RunMode::rcamp && mapper_.ready()) refresh_field();

  const Vec2 target = local_target(*goal);
  const auto pc = planner_config(static_cast<std::uint64_t>(tick_) * 2 + 1);
  const auto local = planner::plan_local(state_.position, target, mask_, field_ ? &*field_ : nullptr, pc);
  ++stats_.local_plans;

  std::vector<Vec2> route;
  if (local.ok()) {
    route = local.path.waypoints;
  } else if (mask_.segment_free(state_.position, target)) {
    route = {state_.position, target};
  } else {
    ++stats_.local_failures;
    force_global_ = true;
    return;
  }

  double remaining = step;
  Vec2 pos = state_.position;
  for (std::size_t i = 1; i < route.size() && remaining > 0.0; ++i) {
    const Vec2 seg = route[i] - pos;
    const double len = seg.norm();
    if (len <= remaining) {
      pos = route[i];
      remaining -= len;
    } else {
      pos += seg * (remaining / len);
      remaining = 0.0;
    }
  }
  state_.position = pos;
}

TickRecord MissionExecutor::tick(double dt) {
  TickRecord rec;
  rec.tick = tick_;
  rec.time = time_;
  const Vec2 pos = state_.position;
  rec.position = pos;
  if (finished()) {
    rec.mode = state_.mode;
    return rec;
  }

  fire_events(pos);

  // Sense and filter every AP.
  std::vector<radio::ApReading> readings;
  std::vector<std::optional<double>> raws;
  readings.reserve(aps_.size());
  for (std::size_t i = 0; i < aps_.size(); ++i) {
    const auto raw = radio::sample_rss(aps_[i], pos, cfg_.seed, static_cast<std::uint64_t>(tick_));
    raws.push_back(raw);
    if (raw) {
      readings.push_back({aps_[i].id, aps_[i].active, radio::ewma_update(filters_[i], *raw)});
    } else {
      filters_[i].value.reset();
      readings.push_back({aps_[i].id, aps_[i].active, std::nullopt});
    }
  }
  const auto assoc = radio::associate(readings, current_ap_, monitor_.threshold);
  current_ap_ = assoc.ap_id;
  const bool link = assoc.ap_id.has_value();

  std::optional<std::size_t> reported;
  for (std::size_t i = 0; i < readings.size(); ++i) {
    if (!readings[i].rss) continue;
    if (link ? readings[i].id == *assoc.ap_id : (!reported || *readings[i].rss > *readings[*reported].rss)) {
      reported = i;
    }
  }
  if (reported) {
    rec.raw_rss = raws[*reported];
    rec.filt_rss = readings[*reported].rss;
  }
  rec.ap_id = assoc.ap_id;
  rec.connected = link;

  if (link) monitor_.last_ap = assoc.ap_id;
  if (!link && monitor_.status == LinkStatus::connected) {
    monitor_.status = LinkStatus::lost;
    monitor_.lost_since = time_;
  }

  // Learn.
  const double measured = link ? *assoc.rss : std::max(cfg_.mission.noise_floor, rec.filt_rss.value_or(cfg_.mission.noise_floor));
  const double moved = distance(pos, last_position_);
  last_position_ = pos;
  const auto report = mapper_.ingest({pos, measured}, link, moved);
  if (report.became_ready) force_global_ = true;
  if (report.reoptimized) field_age_ = std::numeric_limits<int>::max() / 2;
  rec.reoptimized = report.reoptimized;
  rec.window_size = mapper_.window().size();
  rec.window_cap = mapper_.window().current_cap();
  rec.grf_ready = mapper_.ready();

  // Mode transitions.
  switch (state_.mode) {
    case Mode::teleop:
    case Mode::executing:
      if (monitor_.status == LinkStatus::lost) enter_recovery();
      break;
    case Mode::recovering:
      if (detector_.update(monitor_, rec.filt_rss)) {
        monitor_.status = LinkStatus::connected;
        monitor_.lost_since.reset();
        force_global_ = true;
        if (cfg_.goal) {
          state_.mode = Mode::executing;
        } else {
          finish(Outcome::goal_reached);
        }
      }
      break;
    case Mode::idle:
      break;
  }

  // Move.
  if (!finished()) {
    const double tol = cfg_.planner.goal_tolerance_cells * mask_.resolution();
    const auto goal = active_goal();
    if (!goal) {
      if (state_.mode == Mode::idle) finish(Outcome::goal_reached);
    } else if (distance(state_.position, *goal) <= tol) {
      switch (state_.mode) {
        case Mode::teleop:
          ++teleop_index_;
          force_global_ = true;
          if (teleop_index_ >= cfg_.teleop_script->size()) {
            if (cfg_.goal) {
              state_.mode = Mode::executing;
            } else {
              finish(Outcome::goal_reached);
            }
          }
          break;
        case Mode::executing:
          finish(Outcome::goal_reached);
          break;
        case Mode::recovering:
          finish(Outcome::unrecovered);
          break;
        case Mode::idle:
          break;
      }
    } else {
      advance(state_.speed * dt);
    }
  }

  rec.mode = state_.mode;
  ++tick_;
  ++since_global_;
  ++field_age_;
  time_ += dt;
  if (!finished() && tick_ >= cfg_.mission.max_ticks) finish(Outcome::max_ticks);
  return rec;
}

}  // namespace rcamp::mission
