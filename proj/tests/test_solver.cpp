#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "mche/errors.hpp"
#include "mche/initialization.hpp"
#include "mche/metrics.hpp"
#include "mche/solver.hpp"
#include "mche/synthetic.hpp"
#include "test_util.hpp"

using namespace mche;
using testutil::pose_angle_diff_deg;
using testutil::pose_translation_diff;

namespace {

SynthOutput make_synth(int n_cameras, int n_poses, double sigma,
                       double dropout, uint64_t seed) {
  SynthConfig cfg;
  cfg.n_cameras = n_cameras;
  cfg.n_poses = n_poses;
  cfg.pixel_noise_sigma = sigma;
  cfg.detection_dropout = dropout;
  cfg.seed = seed;
  return generate(cfg);
}

InitialGuess truth_guess(const SynthOutput& out) {
  InitialGuess g;
  g.hand_eye = out.truth.hand_eye;
  g.board_to_ee = out.truth.board_to_ee;
  for (const auto& kt : covisible_ordered_pairs(out.dataset)) {
    g.cam_to_cam[kt] = compose(out.truth.hand_eye[kt.first],
                               invert(out.truth.hand_eye[kt.second]));
  }
  return g;
}

bool same_pose_bits(const Pose& a, const Pose& b) {
  return std::memcmp(a.rotation.data(), b.rotation.data(),
                     sizeof(double) * 9) == 0 &&
         std::memcmp(a.translation.data(), b.translation.data(),
                     sizeof(double) * 3) == 0;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SynthConfig wide_ring(int n_poses, double dropout, uint64_t seed) {
  SynthConfig cfg = preset("large");
  cfg.ring_radius = 4.0;
  cfg.n_poses = n_poses;
  cfg.pixel_noise_sigma = 0.5;
  cfg.detection_dropout = dropout;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("solver");

TEST_CASE("noiseless four-camera rig is recovered exactly") {
  const auto out = make_synth(4, 12, 0.0, 0.0, 41);
  const auto init = build_initial_guess(out.dataset);
  const auto result = solve(out.dataset, init, SolverOptions{});

  CHECK(result.converged);
  CHECK(result.termination_reason != "max_iterations");
  CHECK(result.final_cost <= result.initial_cost);
  CHECK(result.final_cost < 1e-10);
  CHECK(result.cost.c_total == result.cost.c_rpj + result.cost.c_cross);

  REQUIRE(result.hand_eye.size() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(pose_translation_diff(result.hand_eye[k], out.truth.hand_eye[k]) <
          1e-6);  // 1e-3 mm
    CHECK(pose_angle_diff_deg(result.hand_eye[k], out.truth.hand_eye[k]) <
          1e-4);
  }
  CHECK(pose_translation_diff(result.board_to_ee, out.truth.board_to_ee) <
        1e-6);
  CHECK(pose_angle_diff_deg(result.board_to_ee, out.truth.board_to_ee) < 1e-4);

  for (const auto& [key, gap] : result.pair_consistency) {
    CHECK(gap.translation_m < 1e-6);
    CHECK(gap.rotation_deg < 1e-4);
  }
  REQUIRE(result.per_camera_rms_px.size() == 4);
  for (double rms : result.per_camera_rms_px) CHECK(rms < 1e-6);
}

TEST_CASE("exact ground truth is a fixed point of the iteration") {
  const auto out = make_synth(4, 10, 0.0, 0.0, 43);
  const auto result = solve(out.dataset, truth_guess(out), SolverOptions{});

  CHECK(result.converged);
  CHECK(result.iterations <= 2);
  CHECK(result.final_cost < 1e-12);
  for (int k = 0; k < 4; ++k) {
    CHECK(pose_translation_diff(result.hand_eye[k], out.truth.hand_eye[k]) <
          1e-10);
    CHECK(rad2deg(1e-10) >
          pose_angle_diff_deg(result.hand_eye[k], out.truth.hand_eye[k]));
  }

  // A single allowed iteration must not move the parameters either.
  SolverOptions one;
  one.max_iterations = 1;
  const auto stepped = solve(out.dataset, truth_guess(out), one);
  for (int k = 0; k < 4; ++k) {
    CHECK(pose_translation_diff(stepped.hand_eye[k], out.truth.hand_eye[k]) <
          1e-10);
  }
  for (const auto& rec : stepped.iteration_log) {
    if (rec.iteration > 0) CHECK(rec.step_norm < 1e-10);
  }
}

TEST_CASE("accepted steps never increase the cost") {
  const auto out = make_synth(3, 10, 0.5, 0.1, 47);
  const auto result =
      solve(out.dataset, build_initial_guess(out.dataset), SolverOptions{});

  CHECK(result.converged);
  CHECK(result.final_cost <= result.initial_cost);
  REQUIRE(result.iteration_log.size() >= 2);
  for (size_t i = 1; i < result.iteration_log.size(); ++i) {
    CHECK(result.iteration_log[i].cost <= result.iteration_log[i - 1].cost);
    CHECK(result.iteration_log[i].lambda >= 1e-12);
    CHECK(result.iteration_log[i].lambda <= 1e+12);
  }
  CHECK(result.iteration_log.front().cost == result.initial_cost);
  CHECK(result.iteration_log.back().cost == result.final_cost);
  CHECK(result.iterations ==
        result.iteration_log.back().iteration);
  CHECK(result.wall_time_s > 0.0);
}

TEST_CASE("single-camera problems carry no cross terms") {
  const auto out = make_synth(1, 10, 0.3, 0.0, 53);
  const auto init = build_initial_guess(out.dataset);

  const auto shared = solve(out.dataset, init, SolverOptions{});
  CHECK(shared.converged);
  CHECK(shared.cost.c_cross == 0.0);
  CHECK(shared.cam_to_cam.empty());
  CHECK(shared.pair_consistency.empty());

  // With one camera there is only one board mount either way: toggling the
  // shared-mount option must not change a single bit of the answer.
  SolverOptions indep;
  indep.shared_z_enabled = false;
  const auto split = solve(out.dataset, init, indep);
  CHECK(split.final_cost == shared.final_cost);
  CHECK(split.iterations == shared.iterations);
  CHECK(same_pose_bits(split.hand_eye[0], shared.hand_eye[0]));
  CHECK(same_pose_bits(split.board_to_ee_per_camera.at(0), shared.board_to_ee));
}

TEST_CASE("disabling cross terms reports chain-consistent pair transforms") {
  const auto out = make_synth(3, 10, 0.5, 0.1, 59);
  SolverOptions opt;
  opt.cross_term_enabled = false;
  const auto result = solve(out.dataset, build_initial_guess(out.dataset), opt);

  CHECK(result.converged);
  CHECK(result.cost.c_cross == 0.0);
  CHECK(result.cost.c_total == result.cost.c_rpj);
  CHECK(!result.cam_to_cam.empty());
  for (const auto& [key, pose] : result.cam_to_cam) {
    const Pose chained = compose(result.hand_eye[key.first],
                                 invert(result.hand_eye[key.second]));
    CHECK(pose_translation_diff(pose, chained) < 1e-12);
    CHECK(pose_angle_diff_deg(pose, chained) < 1e-10);
    CHECK(result.pair_consistency.at(key).translation_m < 1e-12);
  }
}

TEST_CASE("independent board mounts converge and report per-camera values") {
  const auto out = make_synth(3, 12, 0.5, 0.1, 61);
  SolverOptions opt;
  opt.shared_z_enabled = false;
  const auto result = solve(out.dataset, build_initial_guess(out.dataset), opt);

  CHECK(result.converged);
  REQUIRE(result.board_to_ee_per_camera.size() == 3);
  const Pose avg = average_poses(result.board_to_ee_per_camera);
  CHECK(pose_translation_diff(result.board_to_ee, avg) < 1e-12);
  for (const auto& z : result.board_to_ee_per_camera) {
    CHECK(pose_translation_diff(z, out.truth.board_to_ee) < 0.05);
    CHECK(pose_angle_diff_deg(z, out.truth.board_to_ee) < 2.0);
  }

  const auto shared = solve(out.dataset, build_initial_guess(out.dataset),
                            SolverOptions{});
  CHECK(shared.board_to_ee_per_camera.empty());
}

TEST_CASE("cross terms leave converged hand-eyes stationary without dropout") {
  // The pair transforms are free variables, so at a minimum they absorb the
  // cross residuals completely and exert no net pull on the hand-eyes.  With
  // dropout disabled the basins are sharp enough that toggling the cross
  // terms reproduces the same hand-eyes to within solver path noise
  // (measured ~1e-9 m / ~1e-7 deg; asserted with two orders of margin).
  for (uint64_t seed : {11, 12, 13}) {
    const SynthOutput out = generate(wide_ring(20, 0.0, seed));
    const InitialGuess init = build_initial_guess(out.dataset);
    SolverOptions off;
    off.cross_term_enabled = false;
    const auto with_cross = solve(out.dataset, init, SolverOptions{});
    const auto without_cross = solve(out.dataset, init, off);
    REQUIRE(with_cross.converged);
    REQUIRE(without_cross.converged);
    for (size_t k = 0; k < with_cross.hand_eye.size(); ++k) {
      CHECK(pose_translation_diff(with_cross.hand_eye[k],
                                  without_cross.hand_eye[k]) < 1e-7);
      CHECK(pose_angle_diff_deg(with_cross.hand_eye[k],
                                without_cross.hand_eye[k]) < 1e-5);
    }
  }
}

TEST_CASE("wide-ring ablation benchmark: cross terms lower the median error") {
  // Seeded benchmark pin: 4 cameras on a 4 m ring, 20 poses, sigma 0.5 px,
  // seeds 1..50.  Median ground-truth hand-eye error over converging runs is
  // lower with cross terms enabled.  The gap is a property of this seed set
  // and geometry, not a structural guarantee (see the stationarity test
  // above); the convergence floor keeps the two medians comparable.
  std::vector<double> with_cross, without_cross;
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    const SynthOutput out = generate(wide_ring(20, 0.1, seed));
    const InitialGuess init = build_initial_guess(out.dataset);
    SolverOptions off;
    off.cross_term_enabled = false;
    const auto a = solve(out.dataset, init, SolverOptions{});
    const auto b = solve(out.dataset, init, off);
    if (a.converged) with_cross.push_back(gt_errors(a, out.truth).translation_mm);
    if (b.converged) without_cross.push_back(gt_errors(b, out.truth).translation_mm);
  }
  CHECK(with_cross.size() >= 45);
  CHECK(without_cross.size() >= 45);
  CHECK(median(with_cross) < median(without_cross));
}

TEST_CASE("repeated solves are identical") {
  const auto out = make_synth(3, 10, 0.5, 0.1, 67);
  const auto init = build_initial_guess(out.dataset);

  const auto a = solve(out.dataset, init, SolverOptions{});
  const auto b = solve(out.dataset, init, SolverOptions{});
  CHECK(a.final_cost == b.final_cost);
  CHECK(a.initial_cost == b.initial_cost);
  CHECK(a.iterations == b.iterations);
  CHECK(a.termination_reason == b.termination_reason);
  REQUIRE(a.iteration_log.size() == b.iteration_log.size());
  for (size_t i = 0; i < a.iteration_log.size(); ++i) {
    CHECK(a.iteration_log[i].cost == b.iteration_log[i].cost);
    CHECK(a.iteration_log[i].lambda == b.iteration_log[i].lambda);
    CHECK(a.iteration_log[i].step_norm == b.iteration_log[i].step_norm);
  }
  for (size_t k = 0; k < a.hand_eye.size(); ++k) {
    CHECK(same_pose_bits(a.hand_eye[k], b.hand_eye[k]));
  }
  CHECK(same_pose_bits(a.board_to_ee, b.board_to_ee));
}

TEST_SUITE_END();
