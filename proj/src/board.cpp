#include "mche/board.hpp"

#include <string>

#include "mche/errors.hpp"

namespace mche {

void BoardModel::validate() const {
  if (rows < 2 || cols < 2) {
    throw ValidationError("board needs at least a 2x2 corner grid, got " +
                          std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!(spacing > 0.0)) {
    throw ValidationError("board spacing must be positive");
  }
}

std::vector<Vec3> corner_points(const BoardModel& b) {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<size_t>(b.rows) * b.cols);
  for (int r = 0; r < b.rows; ++r) {
    for (int c = 0; c < b.cols; ++c) {
      pts.emplace_back(c * b.spacing, r * b.spacing, 0.0);
    }
  }
  return pts;
}

}  // namespace mche
