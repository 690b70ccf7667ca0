#include "rcamp/trav_map.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "rcamp/pgm.hpp"

namespace rcamp::trav {

std::string_view to_string(CellClass c) {
  switch (c) {
    case CellClass::wall: return "wall";
    case CellClass::terrain: return "terrain";
    case CellClass::surmountable_obstacle: return "surmountable_obstacle";
    case CellClass::stairs_ramp: return "stairs_ramp";
  }
  return "terrain";
}

std::optional<CellClass> parse_cell_class(std::string_view s) {
  if (s == "wall") return CellClass::wall;
  if (s == "terrain") return CellClass::terrain;
  if (s == "surmountable_obstacle") return CellClass::surmountable_obstacle;
  if (s == "stairs_ramp") return CellClass::stairs_ramp;
  return std::nullopt;
}

double clearance_term(double clearance, const TravWeights& w) {
  return w.k_cl * std::clamp(w.c_max - clearance, 0.0, w.c_max) / w.c_max;
}

double trav_cost(const TravCell& cell, double clearance, const TravWeights& w) {
  if (cell.occupied()) return kInfiniteCost;
  return combine_trav(w.weight(cell.label), clearance_term(clearance, w), w.k_dn * cell.density,
                      w.k_rg * cell.roughness);
}

// ---------------------------------------------------------------------------

TravGrid::TravGrid(int nx, int ny, double resolution, Vec2 origin, TravCell fill)
    : nx_(nx), ny_(ny), resolution_(resolution), origin_(std::move(origin)) {
  if (nx <= 0 || ny <= 0) throw std::invalid_argument("grid dimensions must be positive");
  if (!(resolution > 0.0)) throw std::invalid_argument("grid resolution must be positive");
  const auto n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  cells_.assign(n, fill);
  clearance_.assign(n, std::numeric_limits<double>::infinity());
  cost_.assign(n, 0.0);
}

Rect TravGrid::bounds() const {
  return {origin_.x(), origin_.y(), origin_.x() + nx_ * resolution_, origin_.y() + ny_ * resolution_};
}

std::optional<CellIndex> TravGrid::cell_of(const Vec2& p) const {
  const int ix = static_cast<int>(std::floor((p.x() - origin_.x()) / resolution_));
  const int iy = static_cast<int>(std::floor((p.y() - origin_.y()) / resolution_));
  if (!in_bounds(ix, iy)) return std::nullopt;
  return CellIndex{ix, iy};
}

Vec2 TravGrid::center(int ix, int iy) const {
  return origin_ + Vec2((ix + 0.5) * resolution_, (iy + 0.5) * resolution_);
}

void TravGrid::fill_rect(const Rect& r, const TravCell& c) {
  for (int iy = 0; iy < ny_; ++iy) {
    for (int ix = 0; ix < nx_; ++ix) {
      if (r.contains(center(ix, iy))) cells_[flat(ix, iy)] = c;
    }
  }
}

namespace {

constexpr double kFar = 1e20;

// Felzenszwalb-Huttenlocher lower envelope of parabolas; in-place on f.
void edt_1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  const double inf = std::numeric_limits<double>::infinity();
  auto intersect = [&](int q, int p) {
    return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
  };
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
  std::copy(d.begin(), d.begin() + n, f.begin());
}

}  // namespace

void TravGrid::compute_clearance(bool boundary_is_obstacle) {
  const int pad = boundary_is_obstacle ? 1 : 0;
  const int w = nx_ + 2 * pad;
  const int h = ny_ + 2 * pad;
  std::vector<double> sq(static_cast<std::size_t>(w) * h, kFar);
  bool any = false;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int ix = x - pad;
      const int iy = y - pad;
      const bool occ = !in_bounds(ix, iy) || cells_[flat(ix, iy)].occupied();
      if (occ) {
        sq[static_cast<std::size_t>(y) * w + x] = 0.0;
        any = true;
      }
    }
  }
  if (!any) {
    std::fill(clearance_.begin(), clearance_.end(), std::numeric_limits<double>::infinity());
    return;
  }

  const int longest = std::max(w, h);
  std::vector<double> f;
  std::vector<double> d(longest);
  std::vector<int> v(longest);
  std::vector<double> z(longest + 1);
  for (int x = 0; x < w; ++x) {
    f.assign(h, 0.0);
    d.resize(h);
    for (int y = 0; y < h; ++y) f[y] = sq[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) sq[static_cast<std::size_t>(y) * w + x] = f[y];
  }
  for (int y = 0; y < h; ++y) {
    f.assign(sq.begin() + static_cast<std::ptrdiff_t>(y) * w, sq.begin() + static_cast<std::ptrdiff_t>(y + 1) * w);
    d.resize(w);
    edt_1d(f, d, v, z);
    std::copy(f.begin(), f.end(), sq.begin() + static_cast<std::ptrdiff_t>(y) * w);
  }

  for (int iy = 0; iy < ny_; ++iy) {
    for (int ix = 0; ix < nx_; ++ix) {
      const double s = sq[static_cast<std::size_t>(iy + pad) * w + (ix + pad)];
      clearance_[flat(ix, iy)] = s >= kFar * 0.5 ? std::numeric_limits<double>::infinity()
                                                 : std::sqrt(s) * resolution_;
    }
  }
}

void TravGrid::compute_costs(const TravWeights& w) {
  weights_ = w;
  for (std::size_t i = 0; i < cells_.size(); ++i) cost_[i] = trav_cost(cells_[i], clearance_[i], w);
}

// ---------------------------------------------------------------------------

TraversableMask::TraversableMask(const TravGrid& grid, double clearance_min)
    : nx_(grid.nx()), ny_(grid.ny()), resolution_(grid.resolution()), origin_(grid.origin()) {
  const auto n = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
  free_.assign(n, 0);
  cost_ = grid.cost();
  clearance_ = grid.clearance();
  for (int iy = 0; iy < ny_; ++iy) {
    for (int ix = 0; ix < nx_; ++ix) {
      const auto& c = grid.cell(ix, iy);
      if (!c.occupied() && grid.clearance(ix, iy) > clearance_min) {
        free_[flat(ix, iy)] = 1;
        ++count_;
      }
    }
  }
}

Rect TraversableMask::bounds() const {
  return {origin_.x(), origin_.y(), origin_.x() + nx_ * resolution_, origin_.y() + ny_ * resolution_};
}

std::optional<CellIndex> TraversableMask::cell_of(const Vec2& p) const {
  const int ix = static_cast<int>(std::floor((p.x() - origin_.x()) / resolution_));
  const int iy = static_cast<int>(std::floor((p.y() - origin_.y()) / resolution_));
  if (!in_bounds(ix, iy)) return std::nullopt;
  return CellIndex{ix, iy};
}

bool TraversableMask::contains(const Vec2& p) const {
  const auto c = cell_of(p);
  return c && contains(c->ix, c->iy);
}

Vec2 TraversableMask::center(int ix, int iy) const {
  return origin_ + Vec2((ix + 0.5) * resolution_, (iy + 0.5) * resolution_);
}

bool TraversableMask::segment_free(const Vec2& a, const Vec2& b) const {
  const Vec2 pa = (a - origin_) / resolution_;
  const Vec2 pb = (b - origin_) / resolution_;
  int ix = static_cast<int>(std::floor(pa.x()));
  int iy = static_cast<int>(std::floor(pa.y()));
  const int ex = static_cast<int>(std::floor(pb.x()));
  const int ey = static_cast<int>(std::floor(pb.y()));
  if (!contains(ix, iy) || !contains(ex, ey)) return false;

  const Vec2 dir = pb - pa;
  const int sx = dir.x() > 0 ? 1 : (dir.x() < 0 ? -1 : 0);
  const int sy = dir.y() > 0 ? 1 : (dir.y() < 0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  const double dtx = sx != 0 ? 1.0 / std::abs(dir.x()) : inf;
  const double dty = sy != 0 ? 1.0 / std::abs(dir.y()) : inf;
  double tx = sx > 0 ? (ix + 1 - pa.x()) * dtx : (sx < 0 ? (pa.x() - ix) * dtx : inf);
  double ty = sy > 0 ? (iy + 1 - pa.y()) * dty : (sy < 0 ? (pa.y() - iy) * dty : inf);

  constexpr double kTie = 1e-12;
  while (ix != ex || iy != ey) {
    if (std::abs(tx - ty) <= kTie) {
      if (tx > 1.0) break;
      // Exact corner crossing: both side cells are touched.
      if (!contains(ix + sx, iy) || !contains(ix, iy + sy)) return false;
      ix += sx;
      iy += sy;
      tx += dtx;
      ty += dty;
    } else if (tx < ty) {
      if (tx > 1.0) break;
      ix += sx;
      tx += dtx;
    } else {
      if (ty > 1.0) break;
      iy += sy;
      ty += dty;
    }
    if (!contains(ix, iy)) return false;
  }
  return true;
}

std::optional<CellIndex> TraversableMask::nearest_free(const Vec2& p) const {
  std::optional<CellIndex> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int iy = 0; iy < ny_; ++iy) {
    for (int ix = 0; ix < nx_; ++ix) {
      if (!free_[flat(ix, iy)]) continue;
      const double d = (center(ix, iy) - p).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = CellIndex{ix, iy};
      }
    }
  }
  return best;
}

const std::vector<int>& TraversableMask::components() const {
  if (!components_.empty() || free_.empty()) return components_;
  components_.assign(free_.size(), -1);
  int label = 0;
  std::deque<CellIndex> queue;
  for (int iy = 0; iy < ny_; ++iy) {
    for (int ix = 0; ix < nx_; ++ix) {
      if (!free_[flat(ix, iy)] || components_[flat(ix, iy)] >= 0) continue;
      components_[flat(ix, iy)] = label;
      queue.push_back({ix, iy});
      while (!queue.empty()) {
        const auto c = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int x = c.ix + dx;
            const int y = c.iy + dy;
            if (contains(x, y) && components_[flat(x, y)] < 0) {
              components_[flat(x, y)] = label;
              queue.push_back({x, y});
            }
          }
        }
      }
      ++label;
    }
  }
  return components_;
}

std::vector<CellIndex> TraversableMask::cells() const {
  std::vector<CellIndex> out;
  out.reserve(count_);
  for (int iy = 0; iy < ny_; ++iy) {
    for (int ix = 0; ix < nx_; ++ix) {
      if (free_[flat(ix, iy)]) out.push_back({ix, iy});
    }
  }
  return out;
}

void write_cost_pgm(const TravGrid& grid, const std::filesystem::path& path, double cost_max) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(grid.nx()) * grid.ny());
  for (int row = 0; row < grid.ny(); ++row) {
    const int iy = grid.ny() - 1 - row;
    for (int ix = 0; ix < grid.nx(); ++ix) {
      const double c = grid.cost(ix, iy);
      const double g = std::isfinite(c) ? 255.0 * std::clamp(c / cost_max, 0.0, 1.0) : 255.0;
      px[static_cast<std::size_t>(row) * grid.nx() + ix] = static_cast<std::uint8_t>(std::lround(g));
    }
  }
  write_pgm(path, grid.nx(), grid.ny(), px,
            "trav cost: gray = round(255 * min(cost, " + std::to_string(cost_max) + ") / " +
                std::to_string(cost_max) + "), wall = 255, top row = max y");
}

}  // namespace rcamp::trav
