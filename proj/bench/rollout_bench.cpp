// Serial vs OpenMP rollout kernels on shifted RevealPick starts. Also checks
// that both produce the same states.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "CLI11.hpp"

#ifdef ANCHOR_HAVE_OPENMP
#include <omp.h>
#endif

#include "anchor/experiment.hpp"
#include "anchor/gap.hpp"
#include "anchor/theory.hpp"

using namespace anchor;

namespace {

template <class F>
double time_ms(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rollout kernel benchmark"};
  int n = 2000, reps = 3;
  std::uint64_t seed = 7;
  app.add_option("-n", n, "starts per kernel call");
  app.add_option("--reps", reps, "repetitions (best time is reported)");
  app.add_option("--seed", seed, "seed");
  CLI11_PARSE(app, argc, argv);

  exp::ExperimentConfig cfg;
  const auto play = exp::make_play(cfg, seed);
  const auto bundle = exp::train_task(sim::TaskKind::RevealPick, cfg, seed, play, cfg.expert_demos);
  const auto sampler = theory::shifted_sampler(bundle.task, cfg);

  int threads = 1;
#ifdef ANCHOR_HAVE_OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("threads=%d n=%d reps=%d\n", threads, n, reps);
  std::printf("%-10s %12s %12s %8s %s\n", "policy", "serial_ms", "parallel_ms", "speedup", "equal");

  const std::pair<const char*, gap::Policy> policies[] = {
      {"oracle", gap::oracle_reduction_policy()},
      {"learned", gap::learned_reduction_policy(bundle.models)},
  };
  bool all_equal = true;
  for (const auto& [name, policy] : policies) {
    std::vector<sim::WorldState> a, b;
    const double ts = time_ms(reps, [&] { a = gap::rollout_states_serial(policy, sampler, cfg.max_reductions, n, seed); });
    const double tp = time_ms(reps, [&] { b = gap::rollout_states(policy, sampler, cfg.max_reductions, n, seed); });
    const bool equal = gap::to_samples(a).vectors == gap::to_samples(b).vectors;
    all_equal = all_equal && equal;
    std::printf("%-10s %12.2f %12.2f %8.2f %s\n", name, ts, tp, ts / tp, equal ? "yes" : "NO");
  }
  return all_equal ? EXIT_SUCCESS : EXIT_FAILURE;
}
