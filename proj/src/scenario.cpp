#include "rcamp/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rcamp {

using nlohmann::json;

namespace {

// Typed access to one JSON object that remembers its path and which keys
// were consumed, so unknown keys can be reported.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ScenarioError(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ScenarioError(at(key), "required field missing");
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    seen_.insert(key);
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ScenarioError(at(key), "required field missing");
    }
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ScenarioError(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ScenarioError(at(key), "must be finite");
    return d;
  }

  long long integer(const std::string& key, std::optional<long long> fallback = std::nullopt) {
    seen_.insert(key);
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ScenarioError(at(key), "required field missing");
    }
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ScenarioError(at(key), "expected an integer");
    return v.get<long long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ScenarioError(at(key), "expected a boolean");
    return v.get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    seen_.insert(key);
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ScenarioError(at(key), "required field missing");
    }
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ScenarioError(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::optional<Vec2> vec2(const std::string& key, bool required) {
    seen_.insert(key);
    if (!has(key)) {
      if (required) throw ScenarioError(at(key), "required field missing");
      return std::nullopt;
    }
    return parse_vec2(j_.at(key), at(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) throw ScenarioError(at(it.key()), "unknown field");
    }
  }

  static Vec2 parse_vec2(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ScenarioError(path, "expected [x, y]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  static Rect parse_rect(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 4) throw ScenarioError(path, "expected [x_min, y_min, x_max, y_max]");
    for (const auto& e : v) {
      if (!e.is_number()) throw ScenarioError(path, "expected numbers");
    }
    Rect r{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
    if (r.x_max < r.x_min || r.y_max < r.y_min) throw ScenarioError(path, "inverted rectangle");
    return r;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string indexed(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

trav::TravCell parse_cell(Fields& f) {
  trav::TravCell c;
  const auto label = f.string("class", std::string("terrain"));
  const auto parsed = trav::parse_cell_class(label);
  if (!parsed) throw ScenarioError(f.at("class"), "unknown class '" + label + "'");
  c.label = *parsed;
  c.roughness = f.number("roughness", 0.0);
  c.density = f.number("density", 0.0);
  if (c.roughness < 0.0) throw ScenarioError(f.at("roughness"), "must be >= 0");
  if (c.density < 0.0) throw ScenarioError(f.at("density"), "must be >= 0");
  return c;
}

GridSpec parse_grid(const json& j) {
  Fields f(j, "grid");
  GridSpec g;
  const auto& cells = f.raw("cells");
  if (!cells.is_array() || cells.size() != 2 || !cells[0].is_number_integer() || !cells[1].is_number_integer()) {
    throw ScenarioError("grid.cells", "expected [nx, ny]");
  }
  g.nx = cells[0].get<int>();
  g.ny = cells[1].get<int>();
  if (g.nx <= 0 || g.ny <= 0) throw ScenarioError("grid.cells", "dimensions must be positive");
  g.resolution = f.number("resolution", 0.5);
  if (!(g.resolution > 0.0)) throw ScenarioError("grid.resolution", "must be positive");
  g.origin = f.vec2("origin", false).value_or(Vec2::Zero());
  if (f.has("fill")) {
    Fields ff(f.raw("fill"), "grid.fill");
    g.fill = parse_cell(ff);
    ff.finish();
  }
  if (f.has("regions")) {
    const auto& regions = f.raw("regions");
    if (!regions.is_array()) throw ScenarioError("grid.regions", "expected an array");
    for (std::size_t i = 0; i < regions.size(); ++i) {
      const auto path = indexed("grid.regions", i);
      Fields rf(regions[i], path);
      GridRegion r;
      r.rect = Fields::parse_rect(rf.raw("rect"), path + ".rect");
      r.cell = parse_cell(rf);
      rf.finish();
      g.regions.push_back(r);
    }
  }
  g.clearance_min = f.number("clearance_min", 0.0);
  if (g.clearance_min < 0.0) throw ScenarioError("grid.clearance_min", "must be >= 0");
  g.boundary_is_obstacle = f.boolean("boundary_is_obstacle", false);
  if (f.has("weights")) {
    Fields wf(f.raw("weights"), "grid.weights");
    g.weights.k_cl = wf.number("k_cl", 1.0);
    g.weights.k_dn = wf.number("k_dn", 1.0);
    g.weights.k_rg = wf.number("k_rg", 1.0);
    g.weights.c_max = wf.number("c_max", 2.0);
    if (!(g.weights.c_max > 0.0)) throw ScenarioError("grid.weights.c_max", "must be positive");
    if (wf.has("class_weights")) {
      Fields cw(wf.raw("class_weights"), "grid.weights.class_weights");
      for (auto cls : {trav::CellClass::terrain, trav::CellClass::surmountable_obstacle, trav::CellClass::stairs_ramp}) {
        const std::string key(trav::to_string(cls));
        g.weights.class_weight[static_cast<std::size_t>(cls)] =
            cw.number(key, g.weights.class_weight[static_cast<std::size_t>(cls)]);
      }
      cw.finish();
    }
    wf.finish();
  }
  f.finish();
  return g;
}

radio::AccessPoint parse_ap(const json& j, const std::string& path) {
  Fields f(j, path);
  radio::AccessPoint ap;
  ap.id = f.string("id");
  ap.position = *f.vec2("position", true);
  auto& p = ap.params;
  p.rss_d0 = f.number("rss_d0", p.rss_d0);
  p.d0 = f.number("d0", p.d0);
  p.eta = f.number("eta", p.eta);
  p.sigma_shadow = f.number("sigma_shadow", p.sigma_shadow);
  p.nakagami_m = f.number("nakagami_m", p.nakagami_m);
  p.multipath = f.boolean("multipath", p.multipath);
  p.shadow_corr_len = f.number("shadow_corr_len", p.shadow_corr_len);
  ap.active = f.boolean("active", true);
  ap.range = f.number("range", ap.range);
  f.finish();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(path, e.what());
  }
  if (!(ap.range > 0.0)) throw ScenarioError(path + ".range", "must be positive");
  return ap;
}

planner::PlannerConfig parse_planner(const json& j) {
  Fields f(j, "planner");
  planner::PlannerConfig c;
  c.lambda_t = f.number("lambda_t", c.lambda_t);
  c.lambda_r = f.number("lambda_r", c.lambda_r);
  c.tau = f.number("tau", c.tau);
  c.epsilon = f.number("epsilon", c.epsilon);
  c.rss_min = f.number("rss_min", c.rss_min);
  c.rss_max = f.number("rss_max", c.rss_max);
  c.trav_min = f.number("trav_min", c.trav_min);
  c.trav_max = f.number("trav_max", c.trav_max);
  c.timeout = f.number("timeout", c.timeout);
  c.max_expansions = static_cast<std::size_t>(f.integer("max_expansions", static_cast<long long>(c.max_expansions)));
  c.local_radius = f.number("local_radius", c.local_radius);
  c.branching = static_cast<std::size_t>(f.integer("branching", static_cast<long long>(c.branching)));
  c.max_step = f.number("max_step", c.max_step);
  c.goal_tolerance_cells = f.number("goal_tolerance_cells", c.goal_tolerance_cells);
  c.deterministic_time = f.boolean("deterministic_time", c.deterministic_time);
  c.connect_rss = f.number("connect_rss", c.connect_rss);
  f.finish();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("planner", e.what());
  }
  return c;
}

grf::Range parse_range(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ScenarioError(path, "expected [lo, hi]");
  }
  grf::Range r{v[0].get<double>(), v[1].get<double>()};
  if (!(r.hi > r.lo)) throw ScenarioError(path, "hi must exceed lo");
  return r;
}

GrfSettings parse_grf(const json& j) {
  Fields f(j, "grf");
  GrfSettings s;
  auto& m = s.mapper;
  m.initial.c_mean = f.number("c_mean", m.initial.c_mean);
  m.initial.sigma_e = f.number("sigma_e", m.initial.sigma_e);
  m.initial.sigma_w = f.number("sigma_w", m.initial.sigma_w);
  m.initial.sigma_n = f.number("sigma_n", m.initial.sigma_n);
  m.min_size = static_cast<std::size_t>(f.integer("min_size", static_cast<long long>(m.min_size)));
  m.max_size = static_cast<std::size_t>(f.integer("max_size", static_cast<long long>(m.max_size)));
  m.reoptimize_every =
      static_cast<std::size_t>(f.integer("reoptimize_every", static_cast<long long>(m.reoptimize_every)));
  m.min_displacement = f.number("min_displacement", m.min_displacement);
  if (f.has("bounds")) {
    Fields b(f.raw("bounds"), "grf.bounds");
    if (b.has("c_mean")) m.bounds.c_mean = parse_range(b.raw("c_mean"), "grf.bounds.c_mean");
    if (b.has("sigma_e")) m.bounds.sigma_e = parse_range(b.raw("sigma_e"), "grf.bounds.sigma_e");
    if (b.has("sigma_w")) m.bounds.sigma_w = parse_range(b.raw("sigma_w"), "grf.bounds.sigma_w");
    b.finish();
  }
  s.query_resolution = f.number("query_resolution", s.query_resolution);
  s.predict_every = static_cast<int>(f.integer("predict_every", s.predict_every));
  f.finish();
  try {
    m.initial.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("grf", e.what());
  }
  if (m.min_size == 0 || m.min_size > m.max_size) throw ScenarioError("grf.min_size", "need 0 < min_size <= max_size");
  if (!(s.query_resolution > 0.0)) throw ScenarioError("grf.query_resolution", "must be positive");
  if (s.predict_every <= 0) throw ScenarioError("grf.predict_every", "must be positive");
  if (m.bounds.sigma_e.lo <= 0.0 || m.bounds.sigma_w.lo <= 0.0) {
    throw ScenarioError("grf.bounds", "scale bounds must be positive");
  }
  return s;
}

void parse_recovery(const json& j, MissionSettings& m) {
  Fields f(j, "recovery");
  m.recovery_margin_db = f.number("margin_db", m.recovery_margin_db);
  m.recovery_hold_ticks = static_cast<int>(f.integer("hold_ticks", m.recovery_hold_ticks));
  m.recovery_lambda_r_gain = f.number("lambda_r_gain", m.recovery_lambda_r_gain);
  m.baseline_uses_recovery_goal = f.boolean("baseline_uses_recovery_goal", m.baseline_uses_recovery_goal);
  f.finish();
  if (m.recovery_hold_ticks <= 0) throw ScenarioError("recovery.hold_ticks", "must be positive");
}

}  // namespace

trav::TravGrid build_grid(const GridSpec& spec) {
  trav::TravGrid grid(spec.nx, spec.ny, spec.resolution, spec.origin, spec.fill);
  for (const auto& r : spec.regions) grid.fill_rect(r.rect, r.cell);
  grid.compute_clearance(spec.boundary_is_obstacle);
  grid.compute_costs(spec.weights);
  return grid;
}

ScenarioConfig parse_scenario(const json& j) {
  Fields f(j, "");
  ScenarioConfig cfg;
  cfg.name = f.string("name", cfg.name);
  const auto seed = f.integer("seed", 0);
  if (seed < 0) throw ScenarioError("seed", "must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.grid = parse_grid(f.raw("grid"));

  const auto& aps = f.raw("aps");
  if (!aps.is_array()) throw ScenarioError("aps", "expected an array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < aps.size(); ++i) {
    auto ap = parse_ap(aps[i], indexed("aps", i));
    if (!ids.insert(ap.id).second) throw ScenarioError(indexed("aps", i) + ".id", "duplicate id '" + ap.id + "'");
    cfg.aps.push_back(std::move(ap));
  }

  cfg.start = *f.vec2("start", true);
  cfg.goal = f.vec2("goal", false);
  cfg.known_ap = f.vec2("known_ap", false);

  const Rect bounds{cfg.grid.origin.x(), cfg.grid.origin.y(), cfg.grid.origin.x() + cfg.grid.nx * cfg.grid.resolution,
                    cfg.grid.origin.y() + cfg.grid.ny * cfg.grid.resolution};

  if (f.has("events")) {
    const auto& ev = f.raw("events");
    if (!ev.is_array()) throw ScenarioError("events", "expected an array");
    for (std::size_t i = 0; i < ev.size(); ++i) {
      const auto path = indexed("events", i);
      Fields ef(ev[i], path);
      ApEvent e;
      e.trigger_region = Fields::parse_rect(ef.raw("trigger_region"), path + ".trigger_region");
      const auto& r = e.trigger_region;
      if (r.x_min < bounds.x_min || r.y_min < bounds.y_min || r.x_max > bounds.x_max || r.y_max > bounds.y_max) {
        throw ScenarioError(path + ".trigger_region", "outside map bounds");
      }
      const auto action = ef.string("action");
      if (action == "ap_off") {
        e.action = ApEvent::Action::ap_off;
      } else if (action == "ap_on") {
        e.action = ApEvent::Action::ap_on;
      } else {
        throw ScenarioError(path + ".action", "expected ap_off or ap_on");
      }
      e.ap_id = ef.string("ap_id");
      if (!ids.contains(e.ap_id)) throw ScenarioError(path + ".ap_id", "unknown AP '" + e.ap_id + "'");
      ef.finish();
      cfg.events.push_back(e);
    }
  }

  if (f.has("teleop_script")) {
    const auto& ts = f.raw("teleop_script");
    if (!ts.is_array()) throw ScenarioError("teleop_script", "expected an array of [x, y]");
    std::vector<Vec2> pts;
    for (std::size_t i = 0; i < ts.size(); ++i) pts.push_back(Fields::parse_vec2(ts[i], indexed("teleop_script", i)));
    cfg.teleop_script = std::move(pts);
  }

  if (f.has("planner")) cfg.planner = parse_planner(f.raw("planner"));
  cfg.planner.seed = cfg.seed;
  if (f.has("grf")) cfg.grf = parse_grf(f.raw("grf"));

  auto& m = cfg.mission;
  m.dt = f.number("dt", m.dt);
  m.speed = f.number("speed", m.speed);
  m.max_ticks = static_cast<int>(f.integer("max_ticks", m.max_ticks));
  m.ewma_alpha = f.number("ewma_alpha", m.ewma_alpha);
  m.connection_threshold = f.number("connection_threshold", m.connection_threshold);
  m.noise_floor = f.number("noise_floor", m.noise_floor);
  m.global_replan_every = static_cast<int>(f.integer("global_replan_every", m.global_replan_every));
  if (f.has("recovery")) parse_recovery(f.raw("recovery"), m);
  f.finish();

  if (!(m.dt > 0.0)) throw ScenarioError("dt", "must be positive");
  if (!(m.speed > 0.0)) throw ScenarioError("speed", "must be positive");
  if (m.max_ticks < 0) throw ScenarioError("max_ticks", "must be non-negative");
  if (m.ewma_alpha < 0.0 || m.ewma_alpha > 1.0) throw ScenarioError("ewma_alpha", "must lie in [0, 1]");
  if (m.global_replan_every <= 0) throw ScenarioError("global_replan_every", "must be positive");

  const auto grid = build_grid(cfg.grid);
  const trav::TraversableMask mask(grid, cfg.grid.clearance_min);
  if (!mask.contains(cfg.start)) throw ScenarioError("start", "not on a traversable cell");
  if (cfg.goal && !bounds.contains(*cfg.goal)) throw ScenarioError("goal", "outside map bounds");
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("", "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ScenarioError("", std::string("JSON parse error: ") + e.what());
  }
  return parse_scenario(j);
}

namespace {

json vec(const Vec2& v) { return json::array({v.x(), v.y()}); }
json rect(const Rect& r) { return json::array({r.x_min, r.y_min, r.x_max, r.y_max}); }
json opt_vec(const std::optional<Vec2>& v) { return v ? vec(*v) : json(nullptr); }

json cell_json(const trav::TravCell& c) {
  return {{"class", std::string(trav::to_string(c.label))}, {"roughness", c.roughness}, {"density", c.density}};
}

}  // namespace

json to_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;

  const auto& g = cfg.grid;
  json regions = json::array();
  for (const auto& r : g.regions) {
    auto rj = cell_json(r.cell);
    rj["rect"] = rect(r.rect);
    regions.push_back(rj);
  }
  json class_weights;
  for (auto cls : {trav::CellClass::terrain, trav::CellClass::surmountable_obstacle, trav::CellClass::stairs_ramp}) {
    class_weights[std::string(trav::to_string(cls))] = g.weights.weight(cls);
  }
  j["grid"] = {{"cells", json::array({g.nx, g.ny})},
               {"resolution", g.resolution},
               {"origin", vec(g.origin)},
               {"fill", cell_json(g.fill)},
               {"regions", regions},
               {"clearance_min", g.clearance_min},
               {"boundary_is_obstacle", g.boundary_is_obstacle},
               {"weights",
                {{"k_cl", g.weights.k_cl},
                 {"k_dn", g.weights.k_dn},
                 {"k_rg", g.weights.k_rg},
                 {"c_max", g.weights.c_max},
                 {"class_weights", class_weights}}}};

  json aps = json::array();
  for (const auto& ap : cfg.aps) {
    aps.push_back({{"id", ap.id},
                   {"position", vec(ap.position)},
                   {"rss_d0", ap.params.rss_d0},
                   {"d0", ap.params.d0},
                   {"eta", ap.params.eta},
                   {"sigma_shadow", ap.params.sigma_shadow},
                   {"nakagami_m", ap.params.nakagami_m},
                   {"multipath", ap.params.multipath},
                   {"shadow_corr_len", ap.params.shadow_corr_len},
                   {"active", ap.active},
                   {"range", ap.range}});
  }
  j["aps"] = aps;
  j["start"] = vec(cfg.start);
  j["goal"] = opt_vec(cfg.goal);
  j["known_ap"] = opt_vec(cfg.known_ap);

  json events = json::array();
  for (const auto& e : cfg.events) {
    events.push_back({{"trigger_region", rect(e.trigger_region)},
                      {"action", e.action == ApEvent::Action::ap_off ? "ap_off" : "ap_on"},
                      {"ap_id", e.ap_id}});
  }
  j["events"] = events;
  if (cfg.teleop_script) {
    json ts = json::array();
    for (const auto& p : *cfg.teleop_script) ts.push_back(vec(p));
    j["teleop_script"] = ts;
  } else {
    j["teleop_script"] = nullptr;
  }

  const auto& p = cfg.planner;
  j["planner"] = {{"lambda_t", p.lambda_t},
                  {"lambda_r", p.lambda_r},
                  {"tau", p.tau},
                  {"epsilon", p.epsilon},
                  {"rss_min", p.rss_min},
                  {"rss_max", p.rss_max},
                  {"trav_min", p.trav_min},
                  {"trav_max", p.trav_max},
                  {"timeout", p.timeout},
                  {"max_expansions", p.max_expansions},
                  {"local_radius", p.local_radius},
                  {"branching", p.branching},
                  {"max_step", p.max_step},
                  {"goal_tolerance_cells", p.goal_tolerance_cells},
                  {"deterministic_time", p.deterministic_time},
                  {"connect_rss", p.connect_rss}};

  const auto& m = cfg.grf.mapper;
  j["grf"] = {{"c_mean", m.initial.c_mean},
              {"sigma_e", m.initial.sigma_e},
              {"sigma_w", m.initial.sigma_w},
              {"sigma_n", m.initial.sigma_n},
              {"min_size", m.min_size},
              {"max_size", m.max_size},
              {"reoptimize_every", m.reoptimize_every},
              {"min_displacement", m.min_displacement},
              {"bounds",
               {{"c_mean", json::array({m.bounds.c_mean.lo, m.bounds.c_mean.hi})},
                {"sigma_e", json::array({m.bounds.sigma_e.lo, m.bounds.sigma_e.hi})},
                {"sigma_w", json::array({m.bounds.sigma_w.lo, m.bounds.sigma_w.hi})}}},
              {"query_resolution", cfg.grf.query_resolution},
              {"predict_every", cfg.grf.predict_every}};

  const auto& ms = cfg.mission;
  j["dt"] = ms.dt;
  j["speed"] = ms.speed;
  j["max_ticks"] = ms.max_ticks;
  j["ewma_alpha"] = ms.ewma_alpha;
  j["connection_threshold"] = ms.connection_threshold;
  j["noise_floor"] = ms.noise_floor;
  j["global_replan_every"] = ms.global_replan_every;
  j["recovery"] = {{"margin_db", ms.recovery_margin_db},
                   {"hold_ticks", ms.recovery_hold_ticks},
                   {"lambda_r_gain", ms.recovery_lambda_r_gain},
                   {"baseline_uses_recovery_goal", ms.baseline_uses_recovery_goal}};
  return j;
}

}  // namespace rcamp
