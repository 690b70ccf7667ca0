#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "rcamp/geometry.hpp"

namespace rcamp::trav {

enum class CellClass : std::uint8_t { wall = 0, terrain = 1, surmountable_obstacle = 2, stairs_ramp = 3 };

std::string_view to_string(CellClass c);
std::optional<CellClass> parse_cell_class(std::string_view s);

struct TravCell {
  CellClass label = CellClass::terrain;
  double roughness = 0.0;
  double density = 0.0;

  bool occupied() const { return label == CellClass::wall; }
};

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

/// Gains of the clearance, density and roughness terms, plus per-class w_L.
struct TravWeights {
  double k_cl = 1.0;
  double k_dn = 1.0;
  double k_rg = 1.0;
  double c_max = 2.0;  // m; clearance beyond this costs nothing
  std::array<double, 4> class_weight{kInfiniteCost, 1.0, 2.0, 1.5};  // indexed by CellClass

  double weight(CellClass c) const { return class_weight[static_cast<std::size_t>(c)]; }
};

/// w_L * (w_Cl + w_Dn + w_Rg)
inline double combine_trav(double w_l, double w_cl, double w_dn, double w_rg) {
  return w_l * (w_cl + w_dn + w_rg);
}

double clearance_term(double clearance, const TravWeights& w);
double trav_cost(const TravCell& cell, double clearance, const TravWeights& w);

struct CellIndex {
  int ix = 0;
  int iy = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

class TravGrid {
 public:
  TravGrid(int nx, int ny, double resolution, Vec2 origin = Vec2::Zero(), TravCell fill = {});

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double resolution() const { return resolution_; }
  const Vec2& origin() const { return origin_; }
  Rect bounds() const;

  bool in_bounds(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < nx_ && iy < ny_; }
  std::size_t flat(int ix, int iy) const { return static_cast<std::size_t>(iy) * nx_ + ix; }
  std::optional<CellIndex> cell_of(const Vec2& p) const;
  Vec2 center(int ix, int iy) const;

  TravCell& cell(int ix, int iy) { return cells_[flat(ix, iy)]; }
  const TravCell& cell(int ix, int iy) const { return cells_[flat(ix, iy)]; }

  /// Label every cell whose centre lies in `r`.
  void fill_rect(const Rect& r, const TravCell& c);

  const std::vector<double>& clearance() const { return clearance_; }
  double clearance(int ix, int iy) const { return clearance_[flat(ix, iy)]; }
  const std::vector<double>& cost() const { return cost_; }
  double cost(int ix, int iy) const { return cost_[flat(ix, iy)]; }
  const TravWeights& weights() const { return weights_; }

  /// Exact Euclidean distance (m, centre to centre) to the nearest occupied
  /// cell; +inf when there is none. With `boundary_is_obstacle` the ring just
  /// outside the grid counts as occupied.
  void compute_clearance(bool boundary_is_obstacle = false);

  /// Recomputes trav cost for every cell from labels and clearance.
  void compute_costs(const TravWeights& w);

 private:
  int nx_;
  int ny_;
  double resolution_;
  Vec2 origin_;
  std::vector<TravCell> cells_;
  std::vector<double> clearance_;
  std::vector<double> cost_;
  TravWeights weights_;
};

/// Non-wall cells whose clearance strictly exceeds clearance_min, with their
/// costs and clearances copied so the mask is a self-contained snapshot.
class TraversableMask {
 public:
  TraversableMask() = default;
  TraversableMask(const TravGrid& grid, double clearance_min);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double resolution() const { return resolution_; }
  const Vec2& origin() const { return origin_; }
  Rect bounds() const;
  std::size_t count() const { return count_; }
  bool empty() const { return count_ == 0; }

  bool in_bounds(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < nx_ && iy < ny_; }
  std::size_t flat(int ix, int iy) const { return static_cast<std::size_t>(iy) * nx_ + ix; }
  bool contains(int ix, int iy) const { return in_bounds(ix, iy) && free_[flat(ix, iy)] != 0; }
  bool contains(const Vec2& p) const;
  std::optional<CellIndex> cell_of(const Vec2& p) const;
  Vec2 center(int ix, int iy) const;
  Vec2 center(const CellIndex& c) const { return center(c.ix, c.iy); }

  double cost(int ix, int iy) const { return cost_[flat(ix, iy)]; }
  double clearance(int ix, int iy) const { return clearance_[flat(ix, iy)]; }

  /// Every cell a straight segment a-b passes through is traversable,
  /// including both neighbours when the segment crosses a cell corner.
  bool segment_free(const Vec2& a, const Vec2& b) const;

  /// Nearest traversable cell centre to `p` (Euclidean), if any.
  std::optional<CellIndex> nearest_free(const Vec2& p) const;

  /// 8-connected component label per cell (-1 off-mask).
  const std::vector<int>& components() const;

  std::vector<CellIndex> cells() const;

 private:
  int nx_ = 0;
  int ny_ = 0;
  double resolution_ = 1.0;
  Vec2 origin_ = Vec2::Zero();
  std::vector<std::uint8_t> free_;
  std::vector<double> cost_;
  std::vector<double> clearance_;
  std::size_t count_ = 0;
  mutable std::vector<int> components_;
};

inline TraversableMask traversable_mask(const TravGrid& grid, double clearance_min) {
  return TraversableMask(grid, clearance_min);
}

/// Binary PGM of the cost field: gray = round(255 * min(cost, cost_max) / cost_max), walls 255.
void write_cost_pgm(const TravGrid& grid, const std::filesystem::path& path, double cost_max);

}  // namespace rcamp::trav
