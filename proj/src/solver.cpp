#include "mche/solver.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "mche/errors.hpp"
#include "mche/residual_eval.hpp"

namespace mche {

namespace {

constexpr double kLambdaMin = 1e-12;
constexpr double kLambdaMax = 1e+12;

double state_norm(const ParameterBlock& p) {
  double s = 0.0;
  auto add = [&s](const PoseParams& q) {
    s += q.axis_angle.squaredNorm() + q.translation.squaredNorm();
  };
  for (const auto& q : p.hand_eye) add(q);
  for (const auto& q : p.board_to_ee) add(q);
  for (const auto& q : p.cam_to_cam) add(q);
  return std::sqrt(s);
}

}  // namespace

CalibrationResult solve(const Dataset& d, const InitialGuess& initial,
                        const SolverOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  options.validate();

  ParameterBlock p = make_parameter_block(d, initial, options);
  const ResidualEvaluator eval(d, options);

  NormalEquations eq = eval.normal_equations(p);
  double cost = eq.report.c_total;
  if (!std::isfinite(cost)) {
    throw NumericalFailure("initial cost is not finite");
  }

  CalibrationResult result;
  result.options = options;
  result.initial_cost = cost;

  double lambda = 1e-4 * eq.h.diagonal().maxCoeff();
  if (!(lambda > 0.0)) lambda = 1e-4;
  lambda = std::clamp(lambda, kLambdaMin, kLambdaMax);

  result.iteration_log.push_back({0, cost, lambda, 0.0});

  bool converged = false;
  std::string reason;
  int accepted = 0;

  if (eq.g.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
    converged = true;
    reason = "gradient_tolerance";
  }

  const int dim = p.scalar_count();
  while (!converged && accepted < options.max_iterations) {
    Eigen::MatrixXd damped = eq.h;
    damped.diagonal().array() += lambda;
    const Eigen::LLT<Eigen::MatrixXd> llt(damped);
    bool usable = (llt.info() == Eigen::Success);
    Eigen::VectorXd delta(dim);
    if (usable) {
      delta = llt.solve(-eq.g);
      usable = delta.allFinite();
    }
    if (!usable) {
      if (lambda >= kLambdaMax) {
        throw NumericalFailure(
            "damped normal equations unsolvable at lambda = 1e12 after " +
            std::to_string(accepted) + " accepted iterations (last cost " +
            std::to_string(cost) + ")");
      }
      lambda = std::min(lambda * 4.0, kLambdaMax);
      continue;
    }

    ParameterBlock trial = p;
    trial.apply_step(delta);
    trial.canonicalize();
    const double trial_cost = eval.cost(trial).c_total;

    if (std::isfinite(trial_cost) && trial_cost < cost) {
      const double decrease = cost - trial_cost;
      const double step = delta.norm();
      p = std::move(trial);
      ++accepted;
      result.iteration_log.push_back({accepted, trial_cost, lambda, step});
      lambda = std::max(lambda * 0.5, kLambdaMin);

      eq = eval.normal_equations(p);
      const double prev = cost;
      cost = trial_cost;

      if (eq.g.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
        converged = true;
        reason = "gradient_tolerance";
      } else if (step < options.parameter_tolerance *
                            (state_norm(p) + options.parameter_tolerance)) {
        converged = true;
        reason = "parameter_tolerance";
      } else if (decrease < options.cost_tolerance * prev) {
        converged = true;
        reason = "cost_tolerance";
      }
    } else {
      if (lambda >= kLambdaMax) {
        reason = "step_rejected_at_max_damping";
        break;
      }
      lambda = std::min(lambda * 4.0, kLambdaMax);
    }
  }

  if (reason.empty()) {
    reason = converged ? "gradient_tolerance" : "max_iterations";
  }

  result.converged = converged;
  result.termination_reason = reason;
  result.iterations = accepted;
  result.final_cost = cost;
  result.cost = eval.cost(p);

  result.hand_eye.reserve(p.hand_eye.size());
  for (const auto& q : p.hand_eye) result.hand_eye.push_back(q.to_pose());

  if (options.shared_z_enabled) {
    result.board_to_ee = p.board_to_ee[0].to_pose();
  } else {
    result.board_to_ee_per_camera.reserve(p.board_to_ee.size());
    for (const auto& q : p.board_to_ee) {
      result.board_to_ee_per_camera.push_back(q.to_pose());
    }
    result.board_to_ee = average_poses(result.board_to_ee_per_camera);
  }

  const auto pairs = covisible_ordered_pairs(d);
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto [k, t] = pairs[i];
    Pose pose;
    if (options.cross_term_enabled) {
      pose = p.cam_to_cam[p.pair_index(k, t)].to_pose();
    } else {
      pose = compose(result.hand_eye[k], invert(result.hand_eye[t]));
    }
    result.cam_to_cam[{k, t}] = pose;

    const Pose chained =
        compose(result.hand_eye[k], invert(result.hand_eye[t]));
    PairConsistency gap;
    gap.translation_m = (pose.translation - chained.translation).norm();
    gap.rotation_deg = relative_angle_deg(pose.rotation, chained.rotation);
    result.pair_consistency[{k, t}] = gap;
  }

  result.per_camera_rms_px = eval.per_camera_rms(p);
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

}  // namespace mche
