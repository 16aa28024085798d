#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "mche/dataset.hpp"
#include "mche/geometry.hpp"
#include "mche/initialization.hpp"
#include "mche/solver.hpp"

namespace mche {

// Optimization state: every pose as a 6-vector (axis-angle, translation).
// Layout order: hand-eye blocks, board-to-ee block(s), camera-pair blocks.
struct ParameterBlock {
  std::vector<PoseParams> hand_eye;              // N
  std::vector<PoseParams> board_to_ee;           // 1 shared or N per-camera
  std::vector<std::pair<int, int>> pair_keys;    // sorted ordered pairs
  std::vector<PoseParams> cam_to_cam;            // aligned with pair_keys

  int z_index(int camera) const {
    return board_to_ee.size() == 1 ? 0 : camera;
  }
  int pair_index(int k, int t) const;  // -1 when absent

  int block_count() const {
    return static_cast<int>(hand_eye.size() + board_to_ee.size() +
                            cam_to_cam.size());
  }
  int scalar_count() const { return 6 * block_count(); }

  // Flat-vector offsets of each block family.
  int hand_eye_offset(int k) const { return 6 * k; }
  int z_offset(int zi) const {
    return 6 * (static_cast<int>(hand_eye.size()) + zi);
  }
  int pair_offset(int pi) const {
    return 6 * (static_cast<int>(hand_eye.size() + board_to_ee.size()) + pi);
  }

  void apply_step(const Eigen::VectorXd& delta);
  void canonicalize();
};

// Builds the optimization state from an initial guess, honoring the solver
// toggles: with cross terms disabled no pair blocks exist; without a shared
// board-to-ee every camera gets its own copy.
ParameterBlock make_parameter_block(const Dataset& d, const InitialGuess& g,
                                    const SolverOptions& options);

// Per-corner reprojection residuals of detection (j, k) through camera k's
// own chain. Corners that land behind the camera yield a constant capped
// residual (magnitude 10 x image diagonal).
std::vector<Vec2> residual_rpj(int j, int k, const ParameterBlock& params,
                               const Dataset& d);

// Per-corner residuals of detection (j, k) re-projected through camera t's
// chain and the pair transform T_Ct^Ck.
std::vector<Vec2> residual_cross(int j, int k, int t,
                                 const ParameterBlock& params,
                                 const Dataset& d);

// Robust per-corner cost: scale^2 * log(1 + squared_norm / scale^2).
double cauchy_cost(double squared_norm, double scale);

CostReport total_cost(const ParameterBlock& params, const Dataset& d,
                      const SolverOptions& options);

struct NormalEquations {
  Eigen::MatrixXd h;  // J^T J, robust-weighted
  Eigen::VectorXd g;  // J^T r, robust-weighted
  CostReport report;
};

// Residual/Jacobian evaluation over all blocks of a dataset. The block list
// is fixed at construction; evaluation is available as a serial reference
// and an OpenMP kernel that produce bitwise-identical results (per-block
// work is independent; accumulation always runs serially in block order).
class ResidualEvaluator {
 public:
  ResidualEvaluator(const Dataset& d, const SolverOptions& options);

  CostReport cost(const ParameterBlock& params, bool parallel = true) const;
  NormalEquations normal_equations(const ParameterBlock& params,
                                   bool parallel = true) const;

  long block_count() const { return static_cast<long>(blocks_.size()); }
  std::vector<double> per_camera_rms(const ParameterBlock& params) const;

 private:
  struct Block {
    bool cross = false;
    int pose = 0;
    int camera = 0;       // observing camera k (residuals in its pixels)
    int source = -1;      // camera t for cross blocks
    const Detection* det = nullptr;
  };

  struct BlockResult;
  void compute_block(const Block& b, const ParameterBlock& params,
                     bool want_jacobian, BlockResult& out) const;

  const Dataset& dataset_;
  SolverOptions options_;
  std::vector<Block> blocks_;
  std::vector<Vec3> object_points_;
};

}  // namespace mche
