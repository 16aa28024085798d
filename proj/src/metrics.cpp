#include "mche/metrics.hpp"

#include <chrono>
#include <cstdio>
#include <map>
#include <string>
#include <utility>

#include "mche/errors.hpp"
#include "json_util.hpp"

namespace mche {

namespace {

ErrorPair pose_gap(const Pose& a, const Pose& b) {
  ErrorPair e;
  e.translation_mm = (a.translation - b.translation).norm() * 1000.0;
  e.rotation_deg = relative_angle_deg(a.rotation, b.rotation);
  return e;
}

void require_same_cameras(const CalibrationResult& result,
                          const GroundTruth& truth) {
  if (result.hand_eye.empty() ||
      result.hand_eye.size() != truth.hand_eye.size()) {
    throw DimensionMismatch("result covers " +
                            std::to_string(result.hand_eye.size()) +
                            " cameras, ground truth " +
                            std::to_string(truth.hand_eye.size()));
  }
}

// One closed-chain evaluation: camera-in-board o hand-eye against
// inverted-mount o inverted-robot. Both sides express the robot base in
// the board frame, so the gap is a pure consistency error.
ErrorPair chain_gap(const CalibrationResult& result,
                    const BoardPoseEstimate& bp, const Pose& robot) {
  const Pose a = invert(bp.board_in_camera);
  const Pose lhs = compose(a, result.hand_eye[bp.camera_index]);
  const Pose rhs = compose(invert(result.board_to_ee), invert(robot));
  return pose_gap(lhs, rhs);
}

const Pose& robot_for(const std::map<int, const Pose*>& by_index, int j) {
  const auto it = by_index.find(j);
  if (it == by_index.end()) {
    throw MissingBoardPose("no robot pose for station " + std::to_string(j));
  }
  return *it->second;
}

}  // namespace

std::vector<ErrorPair> gt_errors_by_camera(const CalibrationResult& result,
                                           const GroundTruth& truth) {
  require_same_cameras(result, truth);
  std::vector<ErrorPair> out;
  out.reserve(result.hand_eye.size());
  for (size_t k = 0; k < result.hand_eye.size(); ++k) {
    out.push_back(pose_gap(result.hand_eye[k], truth.hand_eye[k]));
  }
  return out;
}

ErrorPair gt_errors(const CalibrationResult& result, const GroundTruth& truth) {
  const auto per_camera = gt_errors_by_camera(result, truth);
  ErrorPair mean;
  for (const auto& e : per_camera) {
    mean.translation_mm += e.translation_mm;
    mean.rotation_deg += e.rotation_deg;
  }
  mean.translation_mm /= static_cast<double>(per_camera.size());
  mean.rotation_deg /= static_cast<double>(per_camera.size());
  return mean;
}

ErrorPair axzb_errors(const CalibrationResult& result,
                      const std::vector<BoardPoseEstimate>& board_poses,
                      const std::vector<RobotPose>& robot_poses) {
  if (board_poses.empty()) {
    throw MissingBoardPose("no board poses to evaluate");
  }
  std::map<int, const Pose*> robots;
  for (const auto& rp : robot_poses) robots[rp.pose_index] = &rp.transform;

  ErrorPair mean;
  for (const auto& bp : board_poses) {
    if (bp.camera_index < 0 ||
        bp.camera_index >= static_cast<int>(result.hand_eye.size())) {
      throw DimensionMismatch("board pose references camera " +
                              std::to_string(bp.camera_index));
    }
    const ErrorPair e =
        chain_gap(result, bp, robot_for(robots, bp.pose_index));
    mean.translation_mm += e.translation_mm;
    mean.rotation_deg += e.rotation_deg;
  }
  mean.translation_mm /= static_cast<double>(board_poses.size());
  mean.rotation_deg /= static_cast<double>(board_poses.size());
  return mean;
}

std::vector<ErrorPair> axzb_errors_by_camera(
    const CalibrationResult& result,
    const std::vector<BoardPoseEstimate>& board_poses,
    const std::vector<RobotPose>& robot_poses) {
  std::map<int, const Pose*> robots;
  for (const auto& rp : robot_poses) robots[rp.pose_index] = &rp.transform;

  const size_t n = result.hand_eye.size();
  std::vector<ErrorPair> sums(n);
  std::vector<long> counts(n, 0);
  for (const auto& bp : board_poses) {
    if (bp.camera_index < 0 || bp.camera_index >= static_cast<int>(n)) {
      throw DimensionMismatch("board pose references camera " +
                              std::to_string(bp.camera_index));
    }
    const ErrorPair e =
        chain_gap(result, bp, robot_for(robots, bp.pose_index));
    sums[bp.camera_index].translation_mm += e.translation_mm;
    sums[bp.camera_index].rotation_deg += e.rotation_deg;
    ++counts[bp.camera_index];
  }
  for (size_t k = 0; k < n; ++k) {
    if (counts[k] == 0) {
      throw MissingBoardPose("camera " + std::to_string(k) +
                             " has no evaluated board poses");
    }
    sums[k].translation_mm /= static_cast<double>(counts[k]);
    sums[k].rotation_deg /= static_cast<double>(counts[k]);
  }
  return sums;
}

namespace {

// Per-camera closed-form pipeline shared by the tsai and park rows.
CalibrationResult closed_form(const Dataset& d,
                              HandEyeEstimate (*method)(
                                  const std::vector<BoardPoseEstimate>&,
                                  const std::vector<RobotPose>&)) {
  CalibrationResult out;
  std::vector<Pose> mounts;
  for (int k = 0; k < d.camera_count(); ++k) {
    std::vector<BoardPoseEstimate> cam_poses;
    for (const auto& det : d.detections) {
      if (det.camera_index != k) continue;
      cam_poses.push_back({det.pose_index, k,
                           planar_pose(det.corners, d.board, d.cameras[k])});
    }
    const HandEyeEstimate est = method(cam_poses, d.robot_poses);
    out.hand_eye.push_back(est.hand_eye);
    mounts.push_back(est.board_to_ee);
  }
  out.board_to_ee = average_poses(mounts);
  out.converged = true;
  out.termination_reason = "closed_form";
  return out;
}

}  // namespace

std::vector<MethodRow> compare_methods(const Dataset& d,
                                       const GroundTruth* truth) {
  // Evaluation chains shared by every row; a corner set that determines no
  // pose cannot grade one either, so degenerate detections are skipped.
  std::vector<BoardPoseEstimate> eval_poses;
  for (const auto& det : d.detections) {
    try {
      eval_poses.push_back(
          {det.pose_index, det.camera_index,
           planar_pose(det.corners, d.board, d.cameras[det.camera_index])});
    } catch (const DegenerateConfiguration&) {
    }
  }

  std::vector<MethodRow> rows;
  const auto run = [&](const std::string& name, auto&& method) {
    MethodRow row;
    row.method = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const CalibrationResult res = method();
      row.metrics.runtime_s = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
      if (!res.converged) {
        row.diverged = true;
        row.note = "did not converge (" + res.termination_reason + ")";
      } else {
        const ErrorPair axzb = axzb_errors(res, eval_poses, d.robot_poses);
        row.metrics.e_t_axzb = axzb.translation_mm;
        row.metrics.e_theta_axzb = axzb.rotation_deg;
        for (const auto& e :
             axzb_errors_by_camera(res, eval_poses, d.robot_poses)) {
          row.metrics.per_camera_e_t_axzb.push_back(e.translation_mm);
          row.metrics.per_camera_e_theta_axzb.push_back(e.rotation_deg);
        }
        if (truth != nullptr) {
          const ErrorPair gt = gt_errors(res, *truth);
          row.metrics.e_t_gt = gt.translation_mm;
          row.metrics.e_theta_gt = gt.rotation_deg;
          for (const auto& e : gt_errors_by_camera(res, *truth)) {
            row.metrics.per_camera_e_t_gt.push_back(e.translation_mm);
            row.metrics.per_camera_e_theta_gt.push_back(e.rotation_deg);
          }
        }
      }
    } catch (const std::exception& e) {
      row.diverged = true;
      row.note = e.what();
    }
    rows.push_back(std::move(row));
  };

  run("ours", [&] { return solve(d, build_initial_guess(d), SolverOptions{}); });
  run("ours-no-cross", [&] {
    SolverOptions opt;
    opt.cross_term_enabled = false;
    return solve(d, build_initial_guess(d), opt);
  });
  run("ours-independent-z", [&] {
    SolverOptions opt;
    opt.shared_z_enabled = false;
    return solve(d, build_initial_guess(d), opt);
  });
  run("tsai", [&] { return closed_form(d, solve_tsai); });
  run("park", [&] { return closed_form(d, solve_park); });
  return rows;
}

std::string comparison_table(const std::vector<MethodRow>& rows) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof(line), "%-20s %12s %14s %12s %16s %11s\n",
                "method", "e_t_gt[mm]", "e_theta_gt[deg]", "e_t_axzb[mm]",
                "e_theta_axzb[deg]", "runtime[s]");
  out += line;

  const auto num = [](std::optional<double> v) {
    char buf[32];
    if (!v) return std::string("-");
    std::snprintf(buf, sizeof(buf), "%.6g", *v);
    return std::string(buf);
  };
  for (const auto& row : rows) {
    if (row.diverged) {
      std::snprintf(line, sizeof(line), "%-20s %12s %14s %12s %16s %11s  (%s)\n",
                    row.method.c_str(), "-", "-", "-", "-", "-",
                    row.note.c_str());
    } else {
      const auto& m = row.metrics;
      std::snprintf(line, sizeof(line), "%-20s %12s %14s %12s %16s %11.4f\n",
                    row.method.c_str(), num(m.e_t_gt).c_str(),
                    num(m.e_theta_gt).c_str(), num(m.e_t_axzb).c_str(),
                    num(m.e_theta_axzb).c_str(), m.runtime_s);
    }
    out += line;
  }
  return out;
}

std::string comparison_records(const std::vector<MethodRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json rec;
    rec["method"] = row.method;
    rec["diverged"] = row.diverged;
    if (row.diverged) {
      rec["note"] = row.note;
    } else {
      const auto& m = row.metrics;
      if (m.e_t_gt) rec["e_t_gt_mm"] = round_sig12(*m.e_t_gt);
      if (m.e_theta_gt) rec["e_theta_gt_deg"] = round_sig12(*m.e_theta_gt);
      rec["e_t_axzb_mm"] = round_sig12(m.e_t_axzb);
      rec["e_theta_axzb_deg"] = round_sig12(m.e_theta_axzb);
      const auto pack = [](const std::vector<double>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (double x : v) a.push_back(round_sig12(x));
        return a;
      };
      if (!m.per_camera_e_t_gt.empty()) {
        rec["per_camera_e_t_gt_mm"] = pack(m.per_camera_e_t_gt);
        rec["per_camera_e_theta_gt_deg"] = pack(m.per_camera_e_theta_gt);
      }
      rec["per_camera_e_t_axzb_mm"] = pack(m.per_camera_e_t_axzb);
      rec["per_camera_e_theta_axzb_deg"] = pack(m.per_camera_e_theta_axzb);
      rec["runtime_s"] = round_sig12(m.runtime_s);
    }
    arr.push_back(std::move(rec));
  }
  return arr.dump(2) + "\n";
}

}  // namespace mche
