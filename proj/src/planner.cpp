#include "rcamp/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace rcamp::planner {

using trav::CellIndex;
using trav::TraversableMask;

void PlannerConfig::validate() const {
  if (!(rss_max > rss_min)) throw std::invalid_argument("planner: rss_max must exceed rss_min");
  if (!(trav_max > trav_min)) throw std::invalid_argument("planner: trav_max must exceed trav_min");
  if (!(tau > 0.0)) throw std::invalid_argument("planner: tau must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("planner: epsilon must be positive");
  if (lambda_t < 0.0 || lambda_r < 0.0) throw std::invalid_argument("planner: weights must be non-negative");
  if (branching == 0) throw std::invalid_argument("planner: branching must be positive");
  if (!(max_step > 0.0) || !(local_radius > 0.0)) throw std::invalid_argument("planner: radii must be positive");
}

std::string_view to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::ok: return "ok";
    case PlanStatus::unreachable: return "unreachable";
    case PlanStatus::timeout: return "timeout";
  }
  return "unreachable";
}

RssField::RssField(grf::QueryGrid g, const grf::Prediction& p)
    : grid(std::move(g)), mean(p.mean), confidence(p.confidence) {}

RssField::Sample RssField::at(const Vec2& p) const {
  const auto k = static_cast<Eigen::Index>(grid.nearest(p));
  return {mean(k), confidence(k)};
}

double pi_trav(double trav, const PlannerConfig& cfg) {
  const double t = std::clamp(trav, cfg.trav_min, cfg.trav_max);
  return cfg.lambda_t * (t - cfg.trav_min) / (cfg.trav_max - cfg.trav_min + cfg.epsilon) + 1.0;
}

double pi_rss(double rss, double alpha_r, double t, const PlannerConfig& cfg) {
  const double r = std::clamp(rss, cfg.rss_min, cfg.rss_max);
  const double a = std::clamp(alpha_r, 0.0, 1.0);
  return cfg.lambda_r * a * std::exp(-t / cfg.tau) * (cfg.rss_max - r) / (cfg.rss_max - cfg.rss_min + cfg.epsilon) +
         1.0;
}

double edge_cost(const Vec2& from, const Vec2& to, const Vec2& goal, double t, const PlannerConfig& cfg,
                 double trav, double rss, double alpha_r) {
  return (distance(from, to) + distance(to, goal)) * pi_trav(trav, cfg) * pi_rss(rss, alpha_r, t, cfg);
}

double edge_cost(const Vec2& from, const Vec2& to, const Vec2& goal, const PlannerConfig& cfg, double trav) {
  return (distance(from, to) + distance(to, goal)) * pi_trav(trav, cfg);
}

std::vector<std::size_t> weighted_sample_without_replacement(std::span<const double> weights, std::size_t k,
                                                             Rng& rng) {
  // key = log(u) / w; the k largest keys form a successive-draw sample.
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double u = rng.uniform();
    if (!(weights[i] > 0.0)) continue;
    keyed.emplace_back(std::log(u) / weights[i], i);
  }
  const std::size_t take = std::min(k, keyed.size());
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(take), keyed.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  std::vector<std::size_t> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(keyed[i].second);
  return out;
}

double neighborhood_radius(double clearance, double resolution, const PlannerConfig& cfg) {
  return std::min(std::max(clearance, 2.0 * resolution), std::max(cfg.max_step, 2.0 * resolution));
}

ExpandResult expand(const PlanNode& node, const TraversableMask& mask, const VisitedIndex& visited, Rng& rng,
                    const PlannerConfig& cfg, std::optional<std::pair<Vec2, double>> region,
                    std::optional<CellIndex> goal_cell) {
  ExpandResult out;
  const double res = mask.resolution();
  const double radius = neighborhood_radius(node.clearance, res, cfg);
  const int span = static_cast<int>(std::ceil(radius / res)) + 1;

  std::vector<CellIndex> candidates;
  std::vector<double> weights;
  bool goal_candidate = false;
  for (int dy = -span; dy <= span; ++dy) {
    for (int dx = -span; dx <= span; ++dx) {
      const CellIndex c{node.cell.ix + dx, node.cell.iy + dy};
      if (c == node.cell || !mask.contains(c.ix, c.iy) || visited.test(c)) continue;
      const Vec2 p = mask.center(c);
      if (distance(p, node.position) > radius) continue;
      if (region && distance(p, region->first) > region->second) continue;
      if (goal_cell && c == *goal_cell) {
        goal_candidate = true;
        continue;
      }
      candidates.push_back(c);
      weights.push_back(1.0 / (mask.cost(c.ix, c.iy) + cfg.epsilon));
    }
  }

  if (goal_candidate && mask.segment_free(node.position, mask.center(*goal_cell))) {
    out.children.push_back(*goal_cell);
  }

  // Draw in sampling order and drop candidates without line of sight; this is
  // the same as sampling from the line-of-sight-valid subset.
  const auto order = weighted_sample_without_replacement(weights, weights.size(), rng);
  std::size_t consumed = 0;
  for (const auto idx : order) {
    if (out.children.size() >= cfg.branching) break;
    ++consumed;
    const auto& c = candidates[idx];
    if (mask.segment_free(node.position, mask.center(c))) out.children.push_back(c);
  }
  out.exhausted = consumed == order.size();
  return out;
}

double path_length(std::span<const Vec2> waypoints) {
  double len = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) len += distance(waypoints[i - 1], waypoints[i]);
  return len;
}

namespace {

struct SearchSpec {
  Vec2 start;
  CellIndex start_cell;
  Vec2 goal;
  std::optional<CellIndex> goal_cell;
  std::optional<std::pair<Vec2, double>> region;
};

PlanResult search(const SearchSpec& spec, const TraversableMask& mask, const RssField* field,
                  const PlannerConfig& cfg) {
  cfg.validate();
  PlanResult result;
  const double tol = cfg.goal_tolerance_cells * mask.resolution();
  Rng rng(hash_combine(cfg.seed, 0x72636d70ULL));
  const auto wall_start = std::chrono::steady_clock::now();

  std::vector<PlanNode> nodes;
  std::vector<double> edge_of;
  VisitedIndex visited(mask.nx(), mask.ny());

  auto fill_node = [&](PlanNode& n) {
    n.clearance = mask.clearance(n.cell.ix, n.cell.iy);
    if (field != nullptr) {
      const auto s = field->at(n.position);
      n.rss_pred = s.rss;
      n.rss_conf = s.confidence;
    }
  };

  PlanNode root;
  root.position = spec.start;
  root.cell = spec.start_cell;
  fill_node(root);
  nodes.push_back(root);
  edge_of.push_back(0.0);
  visited.set(root.cell);

  // (priority, insertion sequence, node index); ties resolve by insertion order.
  using Entry = std::tuple<double, std::uint64_t, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t seq = 0;
  open.emplace(0.0, seq++, 0);

  std::optional<std::size_t> reached;
  while (!open.empty()) {
    const auto [prio, s, idx] = open.top();
    open.pop();
    if (distance(nodes[idx].position, spec.goal) <= tol) {
      reached = idx;
      break;
    }

    double t = 0.0;
    if (cfg.deterministic_time) {
      if (result.expansions >= cfg.max_expansions) {
        result.status = PlanStatus::timeout;
        return result;
      }
      t = static_cast<double>(result.expansions) / static_cast<double>(cfg.max_expansions) * cfg.timeout;
    } else {
      t = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
      if (t > cfg.timeout || result.expansions >= cfg.max_expansions) {
        result.status = PlanStatus::timeout;
        return result;
      }
    }
    ++result.expansions;

    const PlanNode parent = nodes[idx];
    const auto ex = expand(parent, mask, visited, rng, cfg, spec.region, spec.goal_cell);
    double worst = 0.0;
    for (const auto& c : ex.children) {
      PlanNode child;
      child.cell = c;
      child.position = mask.center(c);
      child.parent = idx;
      fill_node(child);
      const double trav = mask.cost(c.ix, c.iy);
      const double cost = field != nullptr
                              ? edge_cost(parent.position, child.position, spec.goal, t, cfg, trav,
                                          child.rss_pred, child.rss_conf)
                              : edge_cost(parent.position, child.position, spec.goal, cfg, trav);
      child.g_cost = parent.g_cost + cost;
      worst = std::max(worst, cost);
      visited.set(c);
      nodes.push_back(child);
      edge_of.push_back(cost);
      open.emplace(child.g_cost, seq++, nodes.size() - 1);
    }
    if (!ex.exhausted) open.emplace(parent.g_cost + worst, seq++, idx);
  }

  if (!reached) {
    result.status = PlanStatus::unreachable;
    return result;
  }

  std::vector<std::size_t> chain;
  for (std::optional<std::size_t> at = *reached; at; at = nodes[*at].parent) chain.push_back(*at);
  std::reverse(chain.begin(), chain.end());
  Path& path = result.path;
  std::size_t connected = 0;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& n = nodes[chain[i]];
    path.waypoints.push_back(n.position);
    if (i > 0) path.edge_costs.push_back(edge_of[chain[i]]);
    if (field != nullptr && n.rss_pred >= cfg.connect_rss) ++connected;
  }
  path.total_cost = nodes[*reached].g_cost;
  path.connected_fraction = static_cast<double>(connected) / static_cast<double>(chain.size());
  result.status = PlanStatus::ok;
  return result;
}

// Start cell, snapping onto the mask when the start sits on a blocked cell.
std::optional<CellIndex> start_cell_for(const Vec2& start, const TraversableMask& mask) {
  if (auto c = mask.cell_of(start); c && mask.contains(c->ix, c->iy)) return c;
  return mask.nearest_free(start);
}

// 4-connected components: a straight segment can only pass between cells
// that share an edge (corner crossings need both side cells).
std::vector<int> components4(const TraversableMask& mask) {
  std::vector<int> label(static_cast<std::size_t>(mask.nx()) * mask.ny(), -1);
  int next = 0;
  std::deque<CellIndex> queue;
  for (const auto& seed : mask.cells()) {
    if (label[mask.flat(seed.ix, seed.iy)] >= 0) continue;
    label[mask.flat(seed.ix, seed.iy)] = next;
    queue.push_back(seed);
    while (!queue.empty()) {
      const auto c = queue.front();
      queue.pop_front();
      constexpr int dx[] = {1, -1, 0, 0};
      constexpr int dy[] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int x = c.ix + dx[k];
        const int y = c.iy + dy[k];
        if (mask.contains(x, y) && label[mask.flat(x, y)] < 0) {
          label[mask.flat(x, y)] = next;
          queue.push_back({x, y});
        }
      }
    }
    ++next;
  }
  return label;
}

std::optional<CellIndex> nearest_matching(const Vec2& p, const TraversableMask& mask, auto&& accept) {
  std::optional<CellIndex> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& c : mask.cells()) {
    if (!accept(c)) continue;
    const double d = (mask.center(c) - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

PlanResult single_point(const Vec2& p) {
  PlanResult r;
  r.status = PlanStatus::ok;
  r.path.waypoints.push_back(p);
  r.path.total_cost = 0.0;
  r.path.connected_fraction = 1.0;
  return r;
}

}  // namespace

PlanResult plan_global(const Vec2& start, const Vec2& goal, const TraversableMask& mask, const RssField* field,
                       const PlannerConfig& cfg) {
  const auto sc = start_cell_for(start, mask);
  if (!sc) return {};
  const double tol = cfg.goal_tolerance_cells * mask.resolution();
  if (distance(start, goal) <= tol) return single_point(start);

  const auto comp = components4(mask);
  const int start_comp = comp[mask.flat(sc->ix, sc->iy)];

  SearchSpec spec;
  spec.start = mask.contains(start) ? start : mask.center(*sc);
  spec.start_cell = *sc;
  if (auto gc = mask.cell_of(goal); gc && mask.contains(gc->ix, gc->iy)) {
    if (comp[mask.flat(gc->ix, gc->iy)] != start_comp) return {};
    spec.goal = goal;
    spec.goal_cell = gc;
  } else {
    const auto snapped =
        nearest_matching(goal, mask, [&](const CellIndex& c) { return comp[mask.flat(c.ix, c.iy)] == start_comp; });
    if (!snapped) return {};
    spec.goal = mask.center(*snapped);
    spec.goal_cell = snapped;
  }
  if (distance(spec.start, spec.goal) <= tol) return single_point(spec.start);
  return search(spec, mask, field, cfg);
}

PlanResult plan_local(const Vec2& current, const Vec2& next_waypoint, const TraversableMask& mask,
                      const RssField* field, const PlannerConfig& cfg) {
  const auto sc = start_cell_for(current, mask);
  if (!sc) return {};
  const double tol = cfg.goal_tolerance_cells * mask.resolution();
  const double radius = cfg.local_radius;

  SearchSpec spec;
  spec.start = mask.contains(current) ? current : mask.center(*sc);
  spec.start_cell = *sc;
  spec.region = std::pair{spec.start, radius};

  Vec2 target = next_waypoint;
  const double d = distance(spec.start, next_waypoint);
  if (d > radius) target = spec.start + (next_waypoint - spec.start) * (radius / d);
  if (distance(spec.start, target) <= tol) return single_point(spec.start);

  const auto tc = mask.cell_of(target);
  if (tc && mask.contains(tc->ix, tc->iy) && distance(mask.center(*tc), spec.start) <= radius) {
    spec.goal = target;
    spec.goal_cell = tc;
  } else {
    const auto snapped = nearest_matching(
        target, mask, [&](const CellIndex& c) { return distance(mask.center(c), spec.start) <= radius; });
    if (!snapped) return {};
    spec.goal = mask.center(*snapped);
    spec.goal_cell = snapped;
  }
  if (distance(spec.start, spec.goal) <= tol) return single_point(spec.start);
  return search(spec, mask, field, cfg);
}

}  // namespace rcamp::planner
