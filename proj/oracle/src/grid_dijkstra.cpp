#include "rcamp_oracle/grid_dijkstra.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

namespace rcamp::oracle {

std::optional<double> grid_shortest_path(const trav::TraversableMask& mask, trav::CellIndex start,
                                         trav::CellIndex goal) {
  if (!mask.contains(start.ix, start.iy) || !mask.contains(goal.ix, goal.iy)) return std::nullopt;
  const int nx = mask.nx();
  const std::size_t n = static_cast<std::size_t>(nx) * mask.ny();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  const std::size_t s = mask.flat(start.ix, start.iy);
  const std::size_t g = mask.flat(goal.ix, goal.iy);
  dist[s] = 0.0;
  open.emplace(0.0, s);
  const double res = mask.resolution();
  while (!open.empty()) {
    const auto [d, u] = open.top();
    open.pop();
    if (d > dist[u]) continue;
    if (u == g) return d;
    const int ux = static_cast<int>(u % nx);
    const int uy = static_cast<int>(u / nx);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int vx = ux + dx;
        const int vy = uy + dy;
        if (!mask.contains(vx, vy)) continue;
        if (dx != 0 && dy != 0 && (!mask.contains(ux + dx, uy) || !mask.contains(ux, uy + dy))) continue;
        const double step = (dx != 0 && dy != 0) ? res * std::sqrt(2.0) : res;
        const std::size_t v = mask.flat(vx, vy);
        if (d + step < dist[v]) {
          dist[v] = d + step;
          open.emplace(dist[v], v);
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace rcamp::oracle
