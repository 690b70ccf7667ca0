#pragma once

#include <Eigen/Core>

namespace rcamp {

using Vec2 = Eigen::Vector2d;

/// Axis-aligned rectangle in world meters, inclusive bounds.
struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  bool contains(const Vec2& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

}  // namespace rcamp
