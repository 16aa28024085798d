#include "mche/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "json_util.hpp"
#include "mche/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mche {

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return j;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

double get_number(const json& j, const std::string& key, const fs::path& path) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw FormatError(path.string() + ": missing numeric field '" + key + "'");
  }
  return j[key].get<double>();
}

CameraIntrinsics load_intrinsics(const fs::path& path) {
  const json j = read_json_file(path);
  CameraIntrinsics intr;
  intr.fx = get_number(j, "fx", path);
  intr.fy = get_number(j, "fy", path);
  intr.cx = get_number(j, "cx", path);
  intr.cy = get_number(j, "cy", path);
  intr.image_width = static_cast<int>(get_number(j, "width", path));
  intr.image_height = static_cast<int>(get_number(j, "height", path));
  if (!j.contains("dist") || !j["dist"].is_array() || j["dist"].size() != 5) {
    throw FormatError(path.string() + ": 'dist' must be an array of 5 numbers");
  }
  for (size_t i = 0; i < 5; ++i) intr.dist[i] = j["dist"][i].get<double>();
  try {
    intr.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return intr;
}

std::vector<RobotPose> load_robot_poses(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  // tolerate trailing whitespace / CR in the header
  std::string header = line;
  header.erase(header.find_last_not_of(" \t\r") + 1);
  if (header != "j,x,y,z,qx,qy,qz,qw") {
    throw FormatError(path.string() + ": expected header j,x,y,z,qx,qy,qz,qw");
  }

  std::map<int, Pose> by_index;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    int j_idx = -1;
    std::array<double, 7> v{};
    if (!(ss >> j_idx >> v[0] >> v[1] >> v[2] >> v[3] >> v[4] >> v[5] >> v[6])) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 'j,x,y,z,qx,qy,qz,qw'");
    }
    for (double x : v) {
      if (!std::isfinite(x)) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": non-finite value");
      }
    }
    if (j_idx < 0) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": negative pose index");
    }
    if (by_index.count(j_idx)) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": duplicate pose index " + std::to_string(j_idx));
    }
    try {
      by_index[j_idx] = pose_from_seven(v);
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": " + e.what());
    }
  }

  std::vector<RobotPose> poses;
  poses.reserve(by_index.size());
  int expected = 0;
  for (const auto& [idx, pose] : by_index) {
    if (idx != expected) {
      throw ValidationError(path.string() + ": pose indices must be dense, " +
                            "missing j=" + std::to_string(expected));
    }
    poses.push_back({idx, pose});
    ++expected;
  }
  return poses;
}

std::vector<Vec2> load_corner_file(const fs::path& path, int expected_corners) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Vec2> corners;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    double u = 0.0, v = 0.0;
    if (!(ss >> u >> v)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 'u v'");
    }
    std::string rest;
    if (ss >> rest) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": trailing content '" + rest + "'");
    }
    if (!std::isfinite(u) || !std::isfinite(v)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": non-finite corner");
    }
    corners.emplace_back(u, v);
  }
  if (static_cast<int>(corners.size()) != expected_corners) {
    throw FormatError(path.string() + ": expected " +
                      std::to_string(expected_corners) + " corners, found " +
                      std::to_string(corners.size()));
  }
  return corners;
}

}  // namespace

const Detection* Dataset::find_detection(int j, int k) const {
  const auto it = std::lower_bound(
      detections.begin(), detections.end(), std::make_pair(k, j),
      [](const Detection& d, const std::pair<int, int>& key) {
        return std::make_pair(d.camera_index, d.pose_index) < key;
      });
  if (it != detections.end() && it->camera_index == k && it->pose_index == j) {
    return &*it;
  }
  return nullptr;
}

void Dataset::validate() const {
  board.validate();
  for (const auto& cam : cameras) cam.validate();
  if (pose_count() < 3) {
    throw ValidationError("need at least 3 robot poses, got " +
                          std::to_string(pose_count()));
  }
  const int corner_count = board.corner_count();
  std::vector<int> per_camera(cameras.size(), 0);
  const Detection* prev = nullptr;
  for (const auto& det : detections) {
    if (det.pose_index < 0 || det.pose_index >= pose_count()) {
      throw ValidationError("detection references pose " +
                            std::to_string(det.pose_index) + " outside [0, " +
                            std::to_string(pose_count()) + ")");
    }
    if (det.camera_index < 0 || det.camera_index >= camera_count()) {
      throw ValidationError("detection references camera " +
                            std::to_string(det.camera_index));
    }
    if (static_cast<int>(det.corners.size()) != corner_count) {
      throw ValidationError("detection (j=" + std::to_string(det.pose_index) +
                            ", k=" + std::to_string(det.camera_index) +
                            ") has " + std::to_string(det.corners.size()) +
                            " corners, board has " +
                            std::to_string(corner_count));
    }
    for (const auto& c : det.corners) {
      if (!c.allFinite()) {
        throw ValidationError("non-finite corner in detection (j=" +
                              std::to_string(det.pose_index) + ", k=" +
                              std::to_string(det.camera_index) + ")");
      }
    }
    // find_detection binary-searches on (camera, pose); require that order
    // here so unsorted hand-built datasets fail loudly instead of silently
    // missing detections. Strict ordering also rules out duplicates.
    if (prev != nullptr &&
        std::make_pair(prev->camera_index, prev->pose_index) >=
            std::make_pair(det.camera_index, det.pose_index)) {
      throw ValidationError(
          "detections must be strictly ordered by (camera, pose); got (j=" +
          std::to_string(det.pose_index) + ", k=" +
          std::to_string(det.camera_index) + ") after (j=" +
          std::to_string(prev->pose_index) + ", k=" +
          std::to_string(prev->camera_index) + ")");
    }
    prev = &det;
    ++per_camera[det.camera_index];
  }
  for (int k = 0; k < camera_count(); ++k) {
    if (per_camera[k] < 3) {
      throw ValidationError("camera " + std::to_string(k) + " has only " +
                            std::to_string(per_camera[k]) +
                            " detections; at least 3 are required");
    }
  }
}

CrossDetectionMatrix cross_matrix(const Dataset& d, int j) {
  if (j < 0 || j >= d.pose_count()) {
    throw IndexError("pose index " + std::to_string(j) + " outside [0, " +
                     std::to_string(d.pose_count()) + ")");
  }
  const int n = d.camera_count();
  CrossDetectionMatrix out;
  out.pose_index = j;
  out.entries = Eigen::MatrixXi::Zero(n, n);
  std::vector<int> seen;
  for (int k = 0; k < n; ++k) {
    if (d.find_detection(j, k) != nullptr) seen.push_back(k);
  }
  for (int a : seen) {
    for (int b : seen) {
      if (a != b) out.entries(a, b) = 1;
    }
  }
  return out;
}

std::vector<std::pair<int, int>> covisible_ordered_pairs(const Dataset& d) {
  std::set<std::pair<int, int>> pairs;
  for (int j = 0; j < d.pose_count(); ++j) {
    std::vector<int> seen;
    for (int k = 0; k < d.camera_count(); ++k) {
      if (d.find_detection(j, k) != nullptr) seen.push_back(k);
    }
    for (int a : seen) {
      for (int b : seen) {
        if (a != b) pairs.insert({a, b});
      }
    }
  }
  return {pairs.begin(), pairs.end()};
}

Dataset load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw IoError("dataset root " + root.string() + " is not a directory");
  }

  Dataset d;
  {
    const fs::path board_path = root / "board.json";
    const json j = read_json_file(board_path);
    d.board.rows = static_cast<int>(get_number(j, "rows", board_path));
    d.board.cols = static_cast<int>(get_number(j, "cols", board_path));
    d.board.spacing = get_number(j, "spacing_m", board_path);
    try {
      d.board.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(board_path.string() + ": " + e.what());
    }
  }

  d.robot_poses = load_robot_poses(root / "robot_poses.csv");

  // cam<k> directories must be contiguous from 0
  std::set<int> cam_ids;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("cam", 0) != 0) continue;
    const std::string idx = name.substr(3);
    if (idx.empty() ||
        idx.find_first_not_of("0123456789") != std::string::npos) {
      continue;
    }
    cam_ids.insert(std::stoi(idx));
  }
  if (cam_ids.empty()) {
    throw ValidationError(root.string() + ": no cam<k> directories found");
  }
  int expected = 0;
  for (int id : cam_ids) {
    if (id != expected) {
      throw ValidationError(root.string() + ": camera directories must be " +
                            "contiguous, missing cam" + std::to_string(expected));
    }
    ++expected;
  }

  const int corner_count = d.board.corner_count();
  for (int k = 0; k < expected; ++k) {
    const fs::path cam_dir = root / ("cam" + std::to_string(k));
    d.cameras.push_back(load_intrinsics(cam_dir / "intrinsics.json"));

    std::set<int> pose_ids;  // sorted so loading is enumeration-order independent
    for (const auto& entry : fs::directory_iterator(cam_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("corners_", 0) != 0 || entry.path().extension() != ".txt") {
        continue;
      }
      const std::string idx = name.substr(8, name.size() - 12);
      if (idx.empty() ||
          idx.find_first_not_of("0123456789") != std::string::npos) {
        throw FormatError(entry.path().string() + ": bad corner file name");
      }
      pose_ids.insert(std::stoi(idx));
    }
    for (int j : pose_ids) {
      if (j >= static_cast<int>(d.robot_poses.size())) {
        throw ValidationError(
            (cam_dir / ("corners_" + std::to_string(j) + ".txt")).string() +
            ": pose index " + std::to_string(j) + " has no robot pose");
      }
      Detection det;
      det.pose_index = j;
      det.camera_index = k;
      det.corners = load_corner_file(
          cam_dir / ("corners_" + std::to_string(j) + ".txt"), corner_count);
      d.detections.push_back(std::move(det));
    }
  }

  d.validate();
  return d;
}

void save_dataset(const Dataset& d, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());

  {
    json j;
    j["rows"] = d.board.rows;
    j["cols"] = d.board.cols;
    j["spacing_m"] = round_sig12(d.board.spacing);
    write_text_file(root / "board.json", j.dump(2) + "\n");
  }

  {
    std::ostringstream csv;
    csv << "j,x,y,z,qx,qy,qz,qw\n";
    for (const auto& rp : d.robot_poses) {
      const auto seven = pose_to_seven(rp.transform);
      csv << rp.pose_index;
      for (double v : seven) csv << "," << format_sig12(v);
      csv << "\n";
    }
    write_text_file(root / "robot_poses.csv", csv.str());
  }

  for (int k = 0; k < d.camera_count(); ++k) {
    const fs::path cam_dir = root / ("cam" + std::to_string(k));
    fs::create_directories(cam_dir, ec);
    if (ec) throw IoError("cannot create " + cam_dir.string());

    const auto& intr = d.cameras[k];
    json j;
    j["fx"] = round_sig12(intr.fx);
    j["fy"] = round_sig12(intr.fy);
    j["cx"] = round_sig12(intr.cx);
    j["cy"] = round_sig12(intr.cy);
    j["dist"] = json::array();
    for (double v : intr.dist) j["dist"].push_back(round_sig12(v));
    j["width"] = intr.image_width;
    j["height"] = intr.image_height;
    write_text_file(cam_dir / "intrinsics.json", j.dump(2) + "\n");
  }

  for (const auto& det : d.detections) {
    std::ostringstream txt;
    for (const auto& c : det.corners) {
      txt << format_sig12(c.x()) << " " << format_sig12(c.y()) << "\n";
    }
    const fs::path path = root / ("cam" + std::to_string(det.camera_index)) /
                          ("corners_" + std::to_string(det.pose_index) + ".txt");
    write_text_file(path, txt.str());
  }
}

std::optional<GroundTruth> load_ground_truth(const fs::path& root) {
  const fs::path path = root / "ground_truth.json";
  if (!fs::exists(path)) return std::nullopt;
  const json j = read_json_file(path);
  if (!j.contains("hand_eye") || !j["hand_eye"].is_array()) {
    throw FormatError(path.string() + ": missing 'hand_eye' array");
  }
  GroundTruth truth;
  for (size_t k = 0; k < j["hand_eye"].size(); ++k) {
    truth.hand_eye.push_back(pose_from_json(
        j["hand_eye"][k], path.string() + ": hand_eye[" + std::to_string(k) + "]"));
  }
  if (!j.contains("board_to_ee")) {
    throw FormatError(path.string() + ": missing 'board_to_ee'");
  }
  truth.board_to_ee =
      pose_from_json(j["board_to_ee"], path.string() + ": board_to_ee");
  return truth;
}

void save_ground_truth(const GroundTruth& truth, const fs::path& root) {
  json j;
  j["hand_eye"] = json::array();
  for (const auto& p : truth.hand_eye) j["hand_eye"].push_back(pose_to_json(p));
  j["board_to_ee"] = pose_to_json(truth.board_to_ee);
  write_text_file(root / "ground_truth.json", j.dump(2) + "\n");
}

}  // namespace mche
