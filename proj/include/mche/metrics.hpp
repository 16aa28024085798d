#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mche/dataset.hpp"
#include "mche/initialization.hpp"
#include "mche/solver.hpp"

namespace mche {

/// Translation / rotation error pair in reporting units (mm, degrees).
struct ErrorPair {
  double translation_mm = 0.0;
  double rotation_deg = 0.0;
};

/// Evaluation summary for one calibration method. The ground-truth columns
/// stay empty unless a reference was available.
struct MetricsReport {
  std::optional<double> e_t_gt;        ///< mm
  std::optional<double> e_theta_gt;    ///< degrees
  double e_t_axzb = 0.0;               ///< mm
  double e_theta_axzb = 0.0;           ///< degrees
  std::vector<double> per_camera_e_t_gt;
  std::vector<double> per_camera_e_theta_gt;
  std::vector<double> per_camera_e_t_axzb;
  std::vector<double> per_camera_e_theta_axzb;
  double runtime_s = 0.0;
};

struct MethodRow {
  std::string method;
  bool diverged = false;
  std::string note;       ///< failure text for diverged rows
  MetricsReport metrics;  ///< meaningful only when !diverged
};

/// Mean hand-eye deviation from the reference over all cameras.
/// Throws DimensionMismatch when the camera counts differ or are zero.
ErrorPair gt_errors(const CalibrationResult& result, const GroundTruth& truth);
std::vector<ErrorPair> gt_errors_by_camera(const CalibrationResult& result,
                                           const GroundTruth& truth);

/// Closed-chain consistency pooled over every supplied (camera, pose) pair
/// with equal weight: the camera-in-board pose chained with the hand-eye
/// estimate must meet the inverted board mount chained with the inverted
/// robot pose. Vanishes on ground-truth inputs over noiseless data.
/// Throws MissingBoardPose when a chain lacks its robot pose or the set is
/// empty, DimensionMismatch for camera indices the result does not cover.
ErrorPair axzb_errors(const CalibrationResult& result,
                      const std::vector<BoardPoseEstimate>& board_poses,
                      const std::vector<RobotPose>& robot_poses);
/// Same chains grouped by camera; throws MissingBoardPose if any camera of
/// the result has no chain at all.
std::vector<ErrorPair> axzb_errors_by_camera(
    const CalibrationResult& result,
    const std::vector<BoardPoseEstimate>& board_poses,
    const std::vector<RobotPose>& robot_poses);

/// Runs every method on the dataset and grades each with both metric
/// families: the joint solver, its two ablations (no cross terms,
/// per-camera board mounts), and the Tsai and Park closed forms. A method
/// failure (degenerate geometry, insufficient motion, non-convergence)
/// marks only its own row as diverged. Wall time covers the full method,
/// including its share of the board-pose extraction.
std::vector<MethodRow> compare_methods(const Dataset& d,
                                       const GroundTruth* truth = nullptr);

/// Human-readable aligned table of compare_methods output.
std::string comparison_table(const std::vector<MethodRow>& rows);

/// The same content as a JSON array, one record per method.
std::string comparison_records(const std::vector<MethodRow>& rows);

}  // namespace mche
