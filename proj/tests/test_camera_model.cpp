#include <doctest.h>

#include "mche/camera_model.hpp"
#include "mche/errors.hpp"
#include "test_util.hpp"

using namespace mche;
using testutil::RandomPoses;

namespace {

CameraIntrinsics plain_intrinsics() {
  CameraIntrinsics intr;
  intr.fx = intr.fy = 600.0;
  intr.cx = 320.0;
  intr.cy = 240.0;
  intr.dist = {0, 0, 0, 0, 0};
  intr.image_width = 640;
  intr.image_height = 480;
  return intr;
}

}  // namespace

TEST_SUITE_BEGIN("camera_model");

TEST_CASE("pinhole projection on fixed points") {
  const auto intr = plain_intrinsics();
  CHECK((project(Vec3(0, 0, 1), intr) - Vec2(320, 240)).norm() < 1e-12);
  CHECK((project(Vec3(0.1, 0, 1), intr) - Vec2(380, 240)).norm() < 1e-12);
}

TEST_CASE("radial distortion matches single-step polynomial evaluation") {
  auto intr = plain_intrinsics();
  intr.dist[0] = -0.1;
  // r^2 = 0.1^2 + 0.05^2 = 0.0125, radial factor 1 - 0.1 * 0.0125 = 0.99875,
  // pixel = (320 + 600*0.1*0.99875, 240 + 600*0.05*0.99875)
  const Vec2 px = project(Vec3(0.1, 0.05, 1.0), intr);
  CHECK(px.x() == doctest::Approx(379.925).epsilon(1e-12));
  CHECK(px.y() == doctest::Approx(269.9625).epsilon(1e-12));

  // tangential terms move the pixel by fx*(2 p1 x y + p2 (r^2 + 2 x^2)) etc.
  intr.dist[2] = 1e-3;
  intr.dist[3] = -2e-3;
  const Vec2 px2 = project(Vec3(0.1, 0.05, 1.0), intr);
  const double dx = 2e-3 * 0.1 * 0.05 - 2e-3 * (0.0125 + 0.02);
  const double dy = 1e-3 * (0.0125 + 0.005) - 4e-3 * 0.1 * 0.05;
  CHECK(px2.x() == doctest::Approx(379.925 + 600 * dx).epsilon(1e-12));
  CHECK(px2.y() == doctest::Approx(269.9625 + 600 * dy).epsilon(1e-12));
}

TEST_CASE("zero-distortion projection is projective") {
  const auto intr = plain_intrinsics();
  RandomPoses rng(21);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 8));
    const double lambda = rng.uniform(0.1, 10.0);
    CHECK((project(p, intr) - project(lambda * p, intr)).norm() < 1e-9);
  }
}

TEST_CASE("points behind the camera are rejected") {
  const auto intr = plain_intrinsics();
  CHECK_THROWS_AS(project(Vec3(0, 0, -1), intr), PointBehindCamera);
  CHECK_THROWS_AS(project(Vec3(0.1, 0.1, 0), intr), PointBehindCamera);
  Vec2 px;
  CHECK_FALSE(try_project(Vec3(0, 0, -1), intr, px));
  CHECK(try_project(Vec3(0, 0, 1), intr, px));
}

TEST_CASE("image bounds are half-open") {
  auto intr = plain_intrinsics();
  CHECK(in_image(Vec2(320, 240), intr));
  CHECK_FALSE(in_image(Vec2(-1, 0), intr));
  CHECK(in_image(Vec2(639.5, 479.5), intr));
  CHECK(in_image(Vec2(0, 0), intr));
  CHECK_FALSE(in_image(Vec2(640, 0), intr));
  CHECK_FALSE(in_image(Vec2(0, 480), intr));
}

TEST_CASE("projection Jacobian matches central differences") {
  CameraIntrinsics intr = plain_intrinsics();
  intr.dist = {-0.28, 0.07, 1.2e-3, -0.8e-3, 0.01};
  RandomPoses rng(22);
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const Vec3 p(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                 rng.uniform(0.5, 8.0));
    const Eigen::Matrix<double, 2, 3> jac = project_jacobian(p, intr);
    for (int c = 0; c < 3; ++c) {
      Vec3 hi = p, lo = p;
      hi[c] += h;
      lo[c] -= h;
      const Vec2 fd = (project(hi, intr) - project(lo, intr)) / (2.0 * h);
      const double scale = std::max(1.0, fd.norm());
      CHECK((jac.col(c) - fd).norm() / scale < 1e-4);
    }
  }
}

TEST_CASE("intrinsics validation") {
  auto intr = plain_intrinsics();
  CHECK_NOTHROW(intr.validate());
  intr.fx = 0.0;
  CHECK_THROWS_AS(intr.validate(), ValidationError);
  intr = plain_intrinsics();
  intr.cx = 640.0;
  CHECK_THROWS_AS(intr.validate(), ValidationError);
}

TEST_SUITE_END();
