#include "mche/result_io.hpp"

#include <fstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "mche/errors.hpp"
#include "json_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mche {

namespace {

json options_to_json(const SolverOptions& o) {
  json j;
  j["max_iterations"] = o.max_iterations;
  j["gradient_tolerance"] = round_sig12(o.gradient_tolerance);
  j["parameter_tolerance"] = round_sig12(o.parameter_tolerance);
  j["cost_tolerance"] = round_sig12(o.cost_tolerance);
  j["cauchy_scale"] = round_sig12(o.cauchy_scale);
  j["cross_term_enabled"] = o.cross_term_enabled;
  j["shared_z_enabled"] = o.shared_z_enabled;
  return j;
}

SolverOptions options_from_json(const json& j, const fs::path& path) {
  SolverOptions o;
  try {
    o.max_iterations = j.at("max_iterations").get<int>();
    o.gradient_tolerance = j.at("gradient_tolerance").get<double>();
    o.parameter_tolerance = j.at("parameter_tolerance").get<double>();
    o.cost_tolerance = j.at("cost_tolerance").get<double>();
    o.cauchy_scale = j.at("cauchy_scale").get<double>();
    o.cross_term_enabled = j.at("cross_term_enabled").get<bool>();
    o.shared_z_enabled = j.at("shared_z_enabled").get<bool>();
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": options: " + e.what());
  }
  return o;
}

}  // namespace

void save_result(const CalibrationResult& r, const fs::path& path) {
  json j;
  j["converged"] = r.converged;
  j["termination_reason"] = r.termination_reason;
  j["iterations"] = r.iterations;
  j["initial_cost"] = round_sig12(r.initial_cost);
  j["final_cost"] = round_sig12(r.final_cost);
  j["cost"] = {{"c_rpj", round_sig12(r.cost.c_rpj)},
               {"c_cross", round_sig12(r.cost.c_cross)},
               {"c_total", round_sig12(r.cost.c_total)},
               {"residual_count", r.cost.residual_count}};
  j["options"] = options_to_json(r.options);

  json hand_eye = json::array();
  for (const auto& p : r.hand_eye) hand_eye.push_back(pose_to_json(p));
  j["hand_eye"] = std::move(hand_eye);
  j["board_to_ee"] = pose_to_json(r.board_to_ee);
  if (!r.board_to_ee_per_camera.empty()) {
    json per_cam = json::array();
    for (const auto& p : r.board_to_ee_per_camera) {
      per_cam.push_back(pose_to_json(p));
    }
    j["board_to_ee_per_camera"] = std::move(per_cam);
  }

  json pairs = json::array();
  for (const auto& [key, pose] : r.cam_to_cam) {
    json rec;
    rec["k"] = key.first;
    rec["t"] = key.second;
    rec["pose"] = pose_to_json(pose);
    const auto it = r.pair_consistency.find(key);
    if (it != r.pair_consistency.end()) {
      rec["consistency_translation_m"] = round_sig12(it->second.translation_m);
      rec["consistency_rotation_deg"] = round_sig12(it->second.rotation_deg);
    }
    pairs.push_back(std::move(rec));
  }
  j["cam_to_cam"] = std::move(pairs);

  json rms = json::array();
  for (double v : r.per_camera_rms_px) rms.push_back(round_sig12(v));
  j["per_camera_rms_px"] = std::move(rms);

  json log = json::array();
  for (const auto& rec : r.iteration_log) {
    log.push_back({{"iteration", rec.iteration},
                   {"cost", round_sig12(rec.cost)},
                   {"lambda", round_sig12(rec.lambda)},
                   {"step_norm", round_sig12(rec.step_norm)}});
  }
  j["iteration_log"] = std::move(log);
  j["wall_time_s"] = round_sig12(r.wall_time_s);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

CalibrationResult load_result(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }

  CalibrationResult r;
  try {
    r.converged = j.at("converged").get<bool>();
    r.termination_reason = j.at("termination_reason").get<std::string>();
    r.iterations = j.at("iterations").get<int>();
    r.initial_cost = j.at("initial_cost").get<double>();
    r.final_cost = j.at("final_cost").get<double>();
    const json& cost = j.at("cost");
    r.cost.c_rpj = cost.at("c_rpj").get<double>();
    r.cost.c_cross = cost.at("c_cross").get<double>();
    r.cost.c_total = cost.at("c_total").get<double>();
    r.cost.residual_count = cost.at("residual_count").get<long>();
    r.options = options_from_json(j.at("options"), path);

    for (const auto& p : j.at("hand_eye")) {
      r.hand_eye.push_back(pose_from_json(p, path.string() + ": hand_eye"));
    }
    r.board_to_ee =
        pose_from_json(j.at("board_to_ee"), path.string() + ": board_to_ee");
    if (j.contains("board_to_ee_per_camera")) {
      for (const auto& p : j["board_to_ee_per_camera"]) {
        r.board_to_ee_per_camera.push_back(
            pose_from_json(p, path.string() + ": board_to_ee_per_camera"));
      }
    }

    for (const auto& rec : j.at("cam_to_cam")) {
      const int k = rec.at("k").get<int>();
      const int t = rec.at("t").get<int>();
      r.cam_to_cam[{k, t}] =
          pose_from_json(rec.at("pose"), path.string() + ": cam_to_cam");
      if (rec.contains("consistency_translation_m")) {
        PairConsistency gap;
        gap.translation_m = rec["consistency_translation_m"].get<double>();
        gap.rotation_deg = rec["consistency_rotation_deg"].get<double>();
        r.pair_consistency[{k, t}] = gap;
      }
    }

    for (const auto& v : j.at("per_camera_rms_px")) {
      r.per_camera_rms_px.push_back(v.get<double>());
    }
    for (const auto& rec : j.at("iteration_log")) {
      IterationRecord it;
      it.iteration = rec.at("iteration").get<int>();
      it.cost = rec.at("cost").get<double>();
      it.lambda = rec.at("lambda").get<double>();
      it.step_norm = rec.at("step_norm").get<double>();
      r.iteration_log.push_back(it);
    }
    r.wall_time_s = j.at("wall_time_s").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return r;
}

}  // namespace mche
