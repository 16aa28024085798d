#pragma once

#include <filesystem>

#include "mche/solver.hpp"

namespace mche {

/// Writes a calibration result as a JSON document: every estimated pose in
/// the 7-number convention, the cost report, an echo of the solver options,
/// the iteration log, and the per-pair diagnostics. Floats carry 12
/// significant digits, so identical results produce identical files.
void save_result(const CalibrationResult& r,
                 const std::filesystem::path& path);

/// Inverse of save_result. Throws IoError when the file cannot be read and
/// FormatError on malformed documents.
CalibrationResult load_result(const std::filesystem::path& path);

}  // namespace mche
