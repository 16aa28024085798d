// Command-line front end: synth / calibrate / evaluate / compare.
//
// Exit codes: 0 success, 1 I/O, 2 validation or configuration,
// 3 solver non-convergence (the result file is still written).

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mche/dataset.hpp"
#include "mche/errors.hpp"
#include "mche/initialization.hpp"
#include "mche/metrics.hpp"
#include "mche/result_io.hpp"
#include "mche/solver.hpp"
#include "mche/synthetic.hpp"

namespace fs = std::filesystem;
using namespace mche;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNotConverged = 3;

struct SynthFlags {
  std::string preset_name = "medium";
  int cameras = -1;
  int poses = -1;
  double radius = -1.0;
  double sigma = -1.0;
  double dropout = -1.0;
  uint64_t seed = 0;
  int board_rows = -1;
  int board_cols = -1;
  double board_spacing = -1.0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--preset", preset_name,
                   "workcell preset: small, medium or large");
    cmd.add_option("--cameras", cameras, "number of cameras");
    cmd.add_option("--poses", poses, "number of robot stations");
    cmd.add_option("--radius", radius, "camera ring radius in meters");
    cmd.add_option("--sigma", sigma, "pixel noise standard deviation");
    cmd.add_option("--dropout", dropout, "detection dropout probability");
    cmd.add_option("--seed", seed, "generator seed");
    cmd.add_option("--board-rows", board_rows, "board corner rows");
    cmd.add_option("--board-cols", board_cols, "board corner columns");
    cmd.add_option("--board-spacing", board_spacing,
                   "corner spacing in meters");
  }

  SynthConfig build() const {
    SynthConfig cfg = preset(preset_name);
    if (cameras > 0) cfg.n_cameras = cameras;
    if (poses > 0) cfg.n_poses = poses;
    if (radius > 0.0) cfg.ring_radius = radius;
    if (sigma >= 0.0) cfg.pixel_noise_sigma = sigma;
    if (dropout >= 0.0) cfg.detection_dropout = dropout;
    if (board_rows > 0) cfg.board.rows = board_rows;
    if (board_cols > 0) cfg.board.cols = board_cols;
    if (board_spacing > 0.0) cfg.board.spacing = board_spacing;
    cfg.seed = seed;
    return cfg;
  }
};

struct SolveFlags {
  double cauchy_scale = -1.0;
  bool no_cross = false;
  bool independent_z = false;
  int max_iters = -1;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--cauchy-scale", cauchy_scale,
                   "robust loss scale in pixels");
    cmd.add_flag("--no-cross", no_cross, "drop the cross-projection terms");
    cmd.add_flag("--independent-z", independent_z,
                 "give each camera its own board mount estimate");
    cmd.add_option("--max-iters", max_iters, "iteration cap");
  }

  SolverOptions build() const {
    SolverOptions opt;
    if (cauchy_scale > 0.0) opt.cauchy_scale = cauchy_scale;
    if (max_iters > 0) opt.max_iterations = max_iters;
    opt.cross_term_enabled = !no_cross;
    opt.shared_z_enabled = !independent_z;
    return opt;
  }
};

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

int cmd_synth(const SynthFlags& flags, const std::string& out_dir) {
  const SynthConfig cfg = flags.build();
  const SynthOutput out = generate(cfg);
  save_dataset(out.dataset, out_dir);
  save_ground_truth(out.truth, out_dir);

  std::printf("wrote %s: %d cameras, %d poses, board %dx%d @ %.3g m\n",
              out_dir.c_str(), out.dataset.camera_count(),
              out.dataset.pose_count(), cfg.board.rows, cfg.board.cols,
              cfg.board.spacing);
  for (size_t k = 0; k < out.visibility_stats.size(); ++k) {
    std::printf("cam%zu: %d detections\n", k, out.visibility_stats[k]);
  }
  return kExitOk;
}

int cmd_calibrate(const std::string& dataset_dir, const std::string& out_file,
                  const SolveFlags& flags) {
  const Dataset d = load_dataset(dataset_dir);
  const SolverOptions options = flags.build();
  const InitialGuess init = build_initial_guess(d);
  const CalibrationResult result = solve(d, init, options);
  save_result(result, out_file);

  std::printf("converged: %s (%s) after %d iterations in %.3f s\n",
              result.converged ? "yes" : "no",
              result.termination_reason.c_str(), result.iterations,
              result.wall_time_s);
  std::printf("cost: c_rpj=%.6g c_cross=%.6g c_total=%.6g over %ld residuals\n",
              result.cost.c_rpj, result.cost.c_cross, result.cost.c_total,
              result.cost.residual_count);
  for (size_t k = 0; k < result.per_camera_rms_px.size(); ++k) {
    std::printf("cam%zu rms: %.4f px\n", k, result.per_camera_rms_px[k]);
  }
  std::printf("result written to %s\n", out_file.c_str());
  return result.converged ? kExitOk : kExitNotConverged;
}

int cmd_evaluate(const std::string& dataset_dir, const std::string& result_file,
                 const std::string& out_file) {
  // Missing inputs are a usage problem, not a stream failure.
  if (!fs::exists(dataset_dir) || !fs::exists(result_file)) {
    std::fprintf(stderr, "error: missing input: %s\n",
                 fs::exists(dataset_dir) ? result_file.c_str()
                                         : dataset_dir.c_str());
    return kExitConfig;
  }
  const Dataset d = load_dataset(dataset_dir);
  const CalibrationResult result = load_result(result_file);

  std::vector<BoardPoseEstimate> chains;
  for (const auto& det : d.detections) {
    try {
      chains.push_back(
          {det.pose_index, det.camera_index,
           planar_pose(det.corners, d.board, d.cameras[det.camera_index])});
    } catch (const DegenerateConfiguration&) {
    }
  }
  const ErrorPair axzb = axzb_errors(result, chains, d.robot_poses);

  nlohmann::json report;
  report["e_t_axzb_mm"] = axzb.translation_mm;
  report["e_theta_axzb_deg"] = axzb.rotation_deg;
  std::printf("e_t_axzb: %.6g mm\ne_theta_axzb: %.6g deg\n",
              axzb.translation_mm, axzb.rotation_deg);

  const auto truth = load_ground_truth(dataset_dir);
  if (truth) {
    const ErrorPair gt = gt_errors(result, *truth);
    report["e_t_gt_mm"] = gt.translation_mm;
    report["e_theta_gt_deg"] = gt.rotation_deg;
    std::printf("e_t_gt: %.6g mm\ne_theta_gt: %.6g deg\n", gt.translation_mm,
                gt.rotation_deg);
  } else {
    std::printf("no ground truth present; reporting closed-chain errors only\n");
  }

  if (!out_file.empty()) {
    write_text(out_file, report.dump(2) + "\n");
    std::printf("report written to %s\n", out_file.c_str());
  }
  return kExitOk;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int sweep_compare(const SynthFlags& flags, int sweep, const std::string& out_file) {
  nlohmann::json per_seed = nlohmann::json::array();
  std::vector<std::string> methods;
  std::map<std::string, std::vector<double>> e_t_gt, e_theta_gt, e_t_axzb,
      e_theta_axzb, runtime;
  std::map<std::string, int> diverged;

  for (int i = 0; i < sweep; ++i) {
    SynthFlags trial = flags;
    trial.seed = flags.seed + static_cast<uint64_t>(i);
    const SynthOutput out = generate(trial.build());
    const auto rows = compare_methods(out.dataset, &out.truth);

    nlohmann::json rec;
    rec["seed"] = trial.seed;
    rec["rows"] = nlohmann::json::parse(comparison_records(rows));
    per_seed.push_back(std::move(rec));

    for (const auto& row : rows) {
      if (methods.size() < rows.size()) methods.push_back(row.method);
      if (row.diverged) {
        ++diverged[row.method];
        continue;
      }
      e_t_gt[row.method].push_back(*row.metrics.e_t_gt);
      e_theta_gt[row.method].push_back(*row.metrics.e_theta_gt);
      e_t_axzb[row.method].push_back(row.metrics.e_t_axzb);
      e_theta_axzb[row.method].push_back(row.metrics.e_theta_axzb);
      runtime[row.method].push_back(row.metrics.runtime_s);
    }
  }

  nlohmann::json medians;
  std::printf("%-20s %10s %14s %16s %14s %10s %9s\n", "method", "completed",
              "med e_t_gt[mm]", "med e_theta[deg]", "med e_t_axzb", "med rt[s]",
              "diverged");
  bool any_completed = false;
  for (const auto& name : methods) {
    nlohmann::json m;
    const int done = static_cast<int>(e_t_gt[name].size());
    m["completed"] = done;
    m["diverged"] = diverged[name];
    if (done > 0) {
      any_completed = true;
      m["e_t_gt_mm"] = median(e_t_gt[name]);
      m["e_theta_gt_deg"] = median(e_theta_gt[name]);
      m["e_t_axzb_mm"] = median(e_t_axzb[name]);
      m["e_theta_axzb_deg"] = median(e_theta_axzb[name]);
      m["runtime_s"] = median(runtime[name]);
      std::printf("%-20s %10d %14.4g %16.4g %14.4g %10.3f %9d\n", name.c_str(),
                  done, median(e_t_gt[name]), median(e_theta_gt[name]),
                  median(e_t_axzb[name]), median(runtime[name]),
                  diverged[name]);
    } else {
      std::printf("%-20s %10d %14s %16s %14s %10s %9d\n", name.c_str(), done,
                  "-", "-", "-", "-", diverged[name]);
    }
    medians[name] = std::move(m);
  }

  nlohmann::json doc;
  doc["sweep"] = sweep;
  doc["base_seed"] = flags.seed;
  doc["preset"] = flags.preset_name;
  doc["medians"] = std::move(medians);
  doc["per_seed"] = std::move(per_seed);
  if (!out_file.empty()) {
    write_text(out_file, doc.dump(2) + "\n");
    std::printf("sweep report written to %s\n", out_file.c_str());
  }
  return any_completed ? kExitOk : kExitNotConverged;
}

int cmd_compare(const std::string& dataset_dir, const std::string& out_file) {
  const Dataset d = load_dataset(dataset_dir);
  const auto truth = load_ground_truth(dataset_dir);
  const auto rows = compare_methods(d, truth ? &*truth : nullptr);

  std::fputs(comparison_table(rows).c_str(), stdout);
  if (!out_file.empty()) {
    write_text(out_file, comparison_records(rows));
    std::printf("records written to %s\n", out_file.c_str());
  }
  const bool any = std::any_of(rows.begin(), rows.end(),
                               [](const MethodRow& r) { return !r.diverged; });
  return any ? kExitOk : kExitNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-camera hand-eye calibration toolkit"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  SynthFlags synth_flags;
  std::string synth_out;
  synth_flags.add_to(*synth);
  synth->add_option("--out", synth_out, "output dataset directory")
      ->required();

  auto* calibrate =
      app.add_subcommand("calibrate", "run the joint calibration");
  std::string cal_dataset, cal_out;
  SolveFlags solve_flags;
  calibrate->add_option("--dataset", cal_dataset, "dataset directory")
      ->required();
  calibrate->add_option("--out", cal_out, "result file")->required();
  solve_flags.add_to(*calibrate);

  auto* evaluate =
      app.add_subcommand("evaluate", "grade a result against a dataset");
  std::string eval_dataset, eval_result, eval_out;
  evaluate->add_option("--dataset", eval_dataset, "dataset directory")
      ->required();
  evaluate->add_option("--result", eval_result, "result file")->required();
  evaluate->add_option("--out", eval_out, "report file")->required();

  auto* compare =
      app.add_subcommand("compare", "run and grade every method");
  std::string cmp_dataset, cmp_out;
  int sweep = 0;
  SynthFlags cmp_flags;
  compare->add_option("--dataset", cmp_dataset,
                      "dataset directory (single comparison)");
  compare->add_option("--out", cmp_out, "records file")->required();
  compare->add_option("--seed-sweep", sweep,
                      "run K seeded synthetic trials and report medians");
  cmp_flags.add_to(*compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_flags, synth_out);
    if (calibrate->parsed())
      return cmd_calibrate(cal_dataset, cal_out, solve_flags);
    if (evaluate->parsed())
      return cmd_evaluate(eval_dataset, eval_result, eval_out);
    if (compare->parsed()) {
      if (sweep > 0) return sweep_compare(cmp_flags, sweep, cmp_out);
      if (cmp_dataset.empty()) {
        std::fprintf(stderr,
                     "error: compare needs --dataset or --seed-sweep\n");
        return kExitConfig;
      }
      return cmd_compare(cmp_dataset, cmp_out);
    }
  } catch (const ConfigError& e) {  // also UnknownPreset
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const DimensionMismatch& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const IndexError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const MissingBoardPose& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const InsufficientMotion& e) {
    std::fprintf(stderr, "error: calibration failed: %s\n", e.what());
    return kExitNotConverged;
  } catch (const DegenerateConfiguration& e) {
    std::fprintf(stderr, "error: calibration failed: %s\n", e.what());
    return kExitNotConverged;
  } catch (const NumericalFailure& e) {
    std::fprintf(stderr, "error: calibration failed: %s\n", e.what());
    return kExitNotConverged;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return kExitOk;
}
