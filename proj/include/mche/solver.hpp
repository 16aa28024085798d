#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mche/dataset.hpp"
#include "mche/geometry.hpp"
#include "mche/initialization.hpp"

namespace mche {

struct SolverOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-10;   // on the max-norm of the gradient
  double parameter_tolerance = 1e-10;  // on accepted step norm, relative
  double cost_tolerance = 1e-12;       // on accepted cost decrease, relative
  double cauchy_scale = 1.0;           // pixels
  bool cross_term_enabled = true;
  bool shared_z_enabled = true;

  void validate() const;
};

struct CostReport {
  double c_rpj = 0.0;    // squared pixels, robust-weighted
  double c_cross = 0.0;  // squared pixels, robust-weighted
  double c_total = 0.0;  // c_rpj + c_cross
  long residual_count = 0;  // number of per-corner 2-vector residuals
};

struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;
  double lambda = 0.0;
  double step_norm = 0.0;
};

// Post-hoc gap between an optimized camera-pair transform and the value
// implied by chaining the two hand-eye transforms.
struct PairConsistency {
  double translation_m = 0.0;
  double rotation_deg = 0.0;
};

struct CalibrationResult {
  std::vector<Pose> hand_eye;            // T_W^Ck per camera
  Pose board_to_ee;                      // T_B^E (average when per-camera)
  std::vector<Pose> board_to_ee_per_camera;  // size N only when not shared
  std::map<std::pair<int, int>, Pose> cam_to_cam;  // T_Ct^Ck
  std::map<std::pair<int, int>, PairConsistency> pair_consistency;

  CostReport cost;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string termination_reason;
  double wall_time_s = 0.0;
  std::vector<double> per_camera_rms_px;
  std::vector<IterationRecord> iteration_log;
  SolverOptions options;
};

CalibrationResult solve(const Dataset& d, const InitialGuess& initial,
                        const SolverOptions& options);

}  // namespace mche
