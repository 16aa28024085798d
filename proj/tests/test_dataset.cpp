#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mche/dataset.hpp"
#include "mche/errors.hpp"
#include "mche/synthetic.hpp"
#include "temp_dir.hpp"

using namespace mche;
using testutil::TempDir;

namespace fs = std::filesystem;

namespace {

SynthConfig small_noiseless(int cameras, int poses, uint64_t seed) {
  SynthConfig cfg = preset("small");
  cfg.n_cameras = cameras;
  cfg.n_poses = poses;
  cfg.pixel_noise_sigma = 0.0;
  cfg.detection_dropout = 0.0;
  cfg.seed = seed;
  return cfg;
}

// Minimal in-memory dataset with a hand-picked sparsity pattern; corners
// are placeholders (cross-detection logic never reads them).
Dataset sparse_fixture() {
  Dataset d;
  d.board = BoardModel{2, 2, 0.05};
  CameraIntrinsics intr;
  intr.fx = intr.fy = 500;
  intr.cx = 320;
  intr.cy = 240;
  intr.dist = {0, 0, 0, 0, 0};
  intr.image_width = 640;
  intr.image_height = 480;
  d.cameras = {intr, intr, intr};
  for (int j = 0; j < 4; ++j) d.robot_poses.push_back({j, Pose{}});
  const std::vector<Vec2> quad(4, Vec2(1.0, 2.0));
  auto add = [&](int j, int k) { d.detections.push_back({j, k, quad}); };
  // pose 0: cameras 0,2   pose 1: camera 1 only   pose 2: all   pose 3: none
  add(0, 0);
  add(0, 2);
  add(1, 1);
  add(2, 0);
  add(2, 1);
  add(2, 2);
  std::sort(d.detections.begin(), d.detections.end(),
            [](const Detection& a, const Detection& b) {
              return std::tie(a.camera_index, a.pose_index) <
                     std::tie(b.camera_index, b.pose_index);
            });
  return d;
}

}  // namespace

TEST_SUITE_BEGIN("dataset");

TEST_CASE("save and load round-trip a synthetic dataset") {
  const SynthOutput out = generate(small_noiseless(2, 5, 31));
  TempDir dir("roundtrip");
  save_dataset(out.dataset, dir.path());
  const Dataset loaded = load_dataset(dir.path());

  CHECK(loaded.camera_count() == out.dataset.camera_count());
  CHECK(loaded.pose_count() == out.dataset.pose_count());
  CHECK(loaded.board.corner_count() == out.dataset.board.corner_count());
  CHECK(loaded.board.spacing == out.dataset.board.spacing);
  REQUIRE(loaded.detections.size() == out.dataset.detections.size());
  for (size_t i = 0; i < loaded.detections.size(); ++i) {
    const auto& a = loaded.detections[i];
    const auto& b = out.dataset.detections[i];
    CHECK(a.pose_index == b.pose_index);
    CHECK(a.camera_index == b.camera_index);
    REQUIRE(a.corners.size() == b.corners.size());
    for (size_t c = 0; c < a.corners.size(); ++c) {
      // 12 significant digits on ~1e3-pixel values
      CHECK((a.corners[c] - b.corners[c]).norm() < 1e-8);
    }
  }
  for (size_t j = 0; j < loaded.robot_poses.size(); ++j) {
    CHECK((loaded.robot_poses[j].transform.translation -
           out.dataset.robot_poses[j].transform.translation)
              .norm() < 1e-10);
    CHECK(relative_angle_deg(loaded.robot_poses[j].transform.rotation,
                             out.dataset.robot_poses[j].transform.rotation) <
          1e-8);
  }
  for (size_t k = 0; k < loaded.cameras.size(); ++k) {
    CHECK(loaded.cameras[k].fx == out.dataset.cameras[k].fx);
    CHECK(loaded.cameras[k].dist == out.dataset.cameras[k].dist);
  }

  // a second save of the loaded copy is byte-identical (12-digit fixpoint)
  TempDir dir2("roundtrip2");
  save_dataset(loaded, dir2.path());
  for (const auto& entry : fs::recursive_directory_iterator(dir.path())) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir.path());
    std::ifstream f1(entry.path(), std::ios::binary);
    std::ifstream f2(dir2.path() / rel, std::ios::binary);
    REQUIRE(f2.good());
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
  }
}

TEST_CASE("ground truth file round-trips") {
  const SynthOutput out = generate(small_noiseless(2, 5, 32));
  TempDir dir("gt");
  save_dataset(out.dataset, dir.path());
  CHECK_FALSE(load_ground_truth(dir.path()).has_value());

  save_ground_truth(out.truth, dir.path());
  const auto truth = load_ground_truth(dir.path());
  REQUIRE(truth.has_value());
  REQUIRE(truth->hand_eye.size() == out.truth.hand_eye.size());
  for (size_t k = 0; k < truth->hand_eye.size(); ++k) {
    CHECK((truth->hand_eye[k].translation -
           out.truth.hand_eye[k].translation)
              .norm() < 1e-10);
    CHECK(relative_angle_deg(truth->hand_eye[k].rotation,
                             out.truth.hand_eye[k].rotation) < 1e-8);
  }
  CHECK((truth->board_to_ee.translation - out.truth.board_to_ee.translation)
            .norm() < 1e-10);
}

TEST_CASE("loader rejects a camera with too few detections") {
  const SynthOutput out = generate(small_noiseless(2, 5, 33));
  TempDir dir("sparse");
  save_dataset(out.dataset, dir.path());
  // strip camera 1 down to two detection files
  std::vector<fs::path> cam1_files;
  for (const auto& entry : fs::directory_iterator(dir.path() / "cam1")) {
    if (entry.path().filename().string().rfind("corners_", 0) == 0) {
      cam1_files.push_back(entry.path());
    }
  }
  REQUIRE(cam1_files.size() >= 3);
  std::sort(cam1_files.begin(), cam1_files.end());
  for (size_t i = 2; i < cam1_files.size(); ++i) fs::remove(cam1_files[i]);
  CHECK_THROWS_WITH_AS(load_dataset(dir.path()),
                       doctest::Contains("camera 1"), ValidationError);
}

TEST_CASE("loader names a corner file with the wrong corner count") {
  const SynthOutput out = generate(small_noiseless(2, 5, 34));
  TempDir dir("shortfile");
  save_dataset(out.dataset, dir.path());
  // truncate one corner file by a line
  fs::path victim;
  for (const auto& entry : fs::directory_iterator(dir.path() / "cam0")) {
    if (entry.path().filename().string().rfind("corners_", 0) == 0) {
      victim = entry.path();
      break;
    }
  }
  REQUIRE(!victim.empty());
  std::vector<std::string> lines;
  {
    std::ifstream in(victim);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  {
    std::ofstream outf(victim, std::ios::trunc);
    for (size_t i = 0; i + 1 < lines.size(); ++i) outf << lines[i] << "\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(dir.path()),
                       doctest::Contains(victim.filename().string().c_str()),
                       FormatError);
}

TEST_CASE("loading is independent of robot pose row order") {
  const SynthOutput out = generate(small_noiseless(2, 5, 35));
  TempDir dir("perm");
  save_dataset(out.dataset, dir.path());
  const Dataset before = load_dataset(dir.path());

  const fs::path csv = dir.path() / "robot_poses.csv";
  std::vector<std::string> lines;
  {
    std::ifstream in(csv);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  REQUIRE(lines.size() >= 4);
  std::reverse(lines.begin() + 1, lines.end());  // keep header
  {
    std::ofstream outf(csv, std::ios::trunc);
    for (const auto& l : lines) outf << l << "\n";
  }
  const Dataset after = load_dataset(dir.path());
  REQUIRE(after.robot_poses.size() == before.robot_poses.size());
  for (size_t j = 0; j < after.robot_poses.size(); ++j) {
    CHECK(after.robot_poses[j].pose_index == before.robot_poses[j].pose_index);
    CHECK((after.robot_poses[j].transform.translation -
           before.robot_poses[j].transform.translation)
              .norm() == 0.0);
  }
}

TEST_CASE("malformed inputs carry file context") {
  const SynthOutput out = generate(small_noiseless(2, 5, 36));
  TempDir dir("ctx");
  save_dataset(out.dataset, dir.path());

  SUBCASE("bad robot pose header") {
    std::ofstream(dir.path() / "robot_poses.csv", std::ios::trunc)
        << "x,y,z\n";
    CHECK_THROWS_WITH_AS(load_dataset(dir.path()),
                         doctest::Contains("robot_poses.csv"), FormatError);
  }
  SUBCASE("non-unit quaternion") {
    std::ofstream(dir.path() / "robot_poses.csv", std::ios::trunc)
        << "j,x,y,z,qx,qy,qz,qw\n0,0,0,0,0,0,0,2\n1,0,0,0,0,0,0,1\n"
        << "2,0,0,0,0,0,0,1\n";
    CHECK_THROWS_AS(load_dataset(dir.path()), ValidationError);
  }
  SUBCASE("missing board file") {
    fs::remove(dir.path() / "board.json");
    CHECK_THROWS_AS(load_dataset(dir.path()), IoError);
  }
  SUBCASE("gap in robot pose indices") {
    std::ofstream(dir.path() / "robot_poses.csv", std::ios::trunc)
        << "j,x,y,z,qx,qy,qz,qw\n0,0,0,0,0,0,0,1\n2,0,0,0,0,0,0,1\n"
        << "3,0,0,0,0,0,0,1\n";
    CHECK_THROWS_AS(load_dataset(dir.path()), ValidationError);
  }
}

TEST_CASE("cross-detection matrix from a hand-built sparsity pattern") {
  const Dataset d = sparse_fixture();

  const CrossDetectionMatrix x0 = cross_matrix(d, 0);
  CHECK(x0.entries(0, 2) == 1);
  CHECK(x0.entries(2, 0) == 1);
  CHECK(x0.entries.sum() == 2);
  CHECK(x0.entries.diagonal().sum() == 0);

  CHECK(cross_matrix(d, 1).entries.sum() == 0);  // single detecting camera
  const CrossDetectionMatrix x2 = cross_matrix(d, 2);
  CHECK(x2.entries.sum() == 6);  // all three cameras pairwise
  CHECK(cross_matrix(d, 3).entries.sum() == 0);

  for (int j = 0; j < 4; ++j) {
    const auto m = cross_matrix(d, j).entries;
    CHECK((m - m.transpose()).cwiseAbs().sum() == 0);
  }

  CHECK_THROWS_AS(cross_matrix(d, 4), IndexError);
  CHECK_THROWS_AS(cross_matrix(d, -1), IndexError);
}

TEST_CASE("co-visible ordered pairs match the sparsity pattern") {
  const Dataset d = sparse_fixture();
  const auto pairs = covisible_ordered_pairs(d);
  const std::vector<std::pair<int, int>> expect = {
      {0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}};
  CHECK(pairs == expect);
}

TEST_CASE("cross-matrix totals match a brute-force co-visibility count") {
  SynthConfig cfg = preset("large");
  cfg.pixel_noise_sigma = 0.0;
  cfg.detection_dropout = 0.0;
  cfg.seed = 37;
  const SynthOutput out = generate(cfg);
  const Dataset& d = out.dataset;

  int via_matrix = 0;
  for (int j = 0; j < d.pose_count(); ++j) {
    const auto m = cross_matrix(d, j).entries;
    for (int k = 0; k < d.camera_count(); ++k) {
      for (int t = k + 1; t < d.camera_count(); ++t) via_matrix += m(k, t);
    }
  }
  int brute = 0;
  for (int j = 0; j < d.pose_count(); ++j) {
    for (int k = 0; k < d.camera_count(); ++k) {
      for (int t = k + 1; t < d.camera_count(); ++t) {
        if (d.find_detection(j, k) && d.find_detection(j, t)) ++brute;
      }
    }
  }
  CHECK(via_matrix == brute);
  CHECK(brute > 0);
}

TEST_SUITE_END();
