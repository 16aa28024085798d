#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

#include <json.hpp>

#include "mche/errors.hpp"
#include "mche/geometry.hpp"

namespace mche {

// All floats on disk carry 12 significant digits.
inline std::string format_sig12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline double round_sig12(double v) {
  return std::strtod(format_sig12(v).c_str(), nullptr);
}

inline nlohmann::json pose_to_json(const Pose& p) {
  auto seven = pose_to_seven(p);
  nlohmann::json arr = nlohmann::json::array();
  for (double v : seven) arr.push_back(round_sig12(v));
  return arr;
}

inline Pose pose_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 7) {
    throw FormatError(where + ": pose must be an array of 7 numbers");
  }
  std::array<double, 7> seven{};
  for (size_t i = 0; i < 7; ++i) seven[i] = j[i].get<double>();
  return pose_from_seven(seven);
}

}  // namespace mche
