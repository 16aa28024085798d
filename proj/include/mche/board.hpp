#pragma once

#include <vector>

#include "mche/geometry.hpp"

namespace mche {

/// Planar grid of inner corners. The board frame has its origin at corner 0,
/// x along columns, y along rows, z out of the plane.
struct BoardModel {
  int rows = 0;
  int cols = 0;
  double spacing = 0.0;  // meters between adjacent corners

  int corner_count() const { return rows * cols; }
  void validate() const;  // ValidationError unless rows,cols >= 2 and spacing > 0
};

/// Corner i = r * cols + c sits at (c * spacing, r * spacing, 0).
std::vector<Vec3> corner_points(const BoardModel& b);

}  // namespace mche
