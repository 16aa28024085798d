#pragma once

#include <stdexcept>
#include <string>

namespace mche {

// File could not be parsed: bad syntax, wrong field count, non-finite numbers.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parsed fine but violates a dataset rule (detection minimums, quaternion norm, ...).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Projection was requested for a point at or behind the optical center.
struct PointBehindCamera : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input geometry does not determine a unique solution (collinear corners, rank loss).
struct DegenerateConfiguration : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Closed-form hand-eye needs at least two relative motions with distinct rotation axes.
struct InsufficientMotion : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownPreset : ConfigError {
  using ConfigError::ConfigError;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingBoardPose : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mche
