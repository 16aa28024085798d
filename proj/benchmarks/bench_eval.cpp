// Times the serial reference evaluator against the OpenMP kernel on a
// synthetic workload and checks that the two agree bitwise.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "mche/initialization.hpp"
#include "mche/residual_eval.hpp"
#include "mche/synthetic.hpp"

using namespace mche;
using clock_type = std::chrono::steady_clock;

namespace {

double time_ms(const ResidualEvaluator& eval, const ParameterBlock& params,
               bool parallel, int reps) {
  double best = 1e300;  // best-of-reps suppresses scheduler noise
  for (int i = 0; i < reps; ++i) {
    const auto t0 = clock_type::now();
    const NormalEquations eq = eval.normal_equations(params, parallel);
    const auto t1 = clock_type::now();
    (void)eq;
    best = std::min(
        best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

bool bitwise_equal(const NormalEquations& a, const NormalEquations& b) {
  return a.report.c_rpj == b.report.c_rpj &&
         a.report.c_cross == b.report.c_cross &&
         std::memcmp(a.h.data(), b.h.data(),
                     sizeof(double) * static_cast<size_t>(a.h.size())) == 0 &&
         std::memcmp(a.g.data(), b.g.data(),
                     sizeof(double) * static_cast<size_t>(a.g.size())) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"normal-equations kernel benchmark"};
  int cameras = 4;
  int poses = 30;
  int reps = 5;
  app.add_option("--cameras", cameras, "number of cameras");
  app.add_option("--poses", poses, "number of robot stations");
  app.add_option("--reps", reps, "repetitions (best-of)");
  CLI11_PARSE(app, argc, argv);

  SynthConfig cfg = preset("large");
  cfg.n_cameras = cameras;
  cfg.n_poses = poses;
  cfg.pixel_noise_sigma = 0.5;
  cfg.detection_dropout = 0.0;
  cfg.seed = 42;
  const SynthOutput out = generate(cfg);

  SolverOptions options;
  const InitialGuess init = build_initial_guess(out.dataset);
  const ParameterBlock params =
      make_parameter_block(out.dataset, init, options);
  const ResidualEvaluator eval(out.dataset, options);

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("workload: %d cameras x %d poses, %ld residual blocks, %d threads\n",
              cameras, poses, eval.block_count(), threads);

  const double serial_ms = time_ms(eval, params, false, reps);
  const double parallel_ms = time_ms(eval, params, true, reps);
  const bool same = bitwise_equal(eval.normal_equations(params, false),
                                  eval.normal_equations(params, true));

  std::printf("serial reference: %9.3f ms\n", serial_ms);
  std::printf("openmp kernel:    %9.3f ms\n", parallel_ms);
  std::printf("speedup:          %9.2fx\n", serial_ms / parallel_ms);
  std::printf("bitwise match:    %s\n", same ? "yes" : "NO");
  return same ? 0 : 1;
}
