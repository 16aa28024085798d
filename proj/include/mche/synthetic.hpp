#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mche/dataset.hpp"

namespace mche {

/// Configuration for the synthetic workcell generator. Cameras sit on a
/// horizontal ring of the given radius around the robot base and look at
/// the workspace center; the calibration board rides on the end effector.
struct SynthConfig {
  int n_cameras = 4;
  int n_poses = 30;            ///< number of robot stations M
  double ring_radius = 2.0;    ///< meters; must leave room for the workspace
  BoardModel board{3, 4, 0.05};
  double pixel_noise_sigma = 0.5;   ///< i.i.d. Gaussian, pixels
  double detection_dropout = 0.1;   ///< probability a visible board is missed
  uint64_t seed = 0;

  /// Throws ConfigError on out-of-range values (radius < 0.8 m would place
  /// a camera inside the robot workspace).
  void validate() const;
};

struct SynthOutput {
  Dataset dataset;
  GroundTruth truth;
  std::vector<int> visibility_stats;  ///< detections per camera (post-dropout)
};

/// Workcell presets: small/medium/large rings (1.4 / 2.0 / 2.5 m radius).
/// Throws UnknownPreset for any other name.
SynthConfig preset(const std::string& name);

/// Generates a full synthetic dataset with exact ground truth. Identical
/// configs produce bitwise-identical output. Throws ConfigError if no
/// end-effector pose set leaves every camera with >= 3 detections after
/// 100 attempts.
SynthOutput generate(const SynthConfig& config);

}  // namespace mche
