// Microbenchmarks for the hot paths: hypervolume sweeps, simulator
// rollouts, the segmentation E-step, and GP fitting.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "stiffopt/bo.hpp"
#include "stiffopt/gp.hpp"
#include "stiffopt/segment.hpp"
#include "stiffopt/sim.hpp"

using namespace stiffopt;

namespace {

std::vector<ObjectivePoint> make_front(int n, RandomStream& stream) {
  std::vector<ObjectivePoint> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    pts.push_back({stream.uniform(0.05, 1.0), stream.uniform(0.05, 1.0)});
  return pts;
}

void bm_hypervolume(benchmark::State& state) {
  RandomStream stream(1, "bench-hv");
  auto pts = make_front(static_cast<int>(state.range(0)), stream);
  const ObjectivePoint r{0.0, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(hypervolume(pts, r));
}
BENCHMARK(bm_hypervolume)->Arg(10)->Arg(100)->Arg(1000);

void bm_rollout(benchmark::State& state) {
  TaskEnv env = TaskEnv::make_door1d();
  ImpedanceConfig cfg = ImpedanceConfig::unit(1, 0.05, 1e-3);
  RandomStream ds(1, "bench-demo");
  Trajectory demo = generate_demonstration(env, default_script(env), cfg, ds, 0.0);
  Segmentation seg = Segmentation::uniform(demo.length(), 3);
  StiffnessParams theta;
  theta.K = Mat::Constant(3, 1, 400.0);
  AttractorTrajectory attractors = compute_attractors(demo, seg, theta, cfg);
  for (auto _ : state) {
    RandomStream rs(2, "bench-roll");
    benchmark::DoNotOptimize(rollout(env, seg, theta, attractors, cfg, rs));
  }
}
BENCHMARK(bm_rollout);

void bm_estep(benchmark::State& state) {
  TaskEnv env = TaskEnv::make_wipe2d();
  ImpedanceConfig cfg = ImpedanceConfig::unit(2, 0.05, 1e-3);
  RandomStream ds(3, "bench-demo");
  Trajectory demo =
      generate_demonstration(env, default_script(env), cfg, ds, 0.001);
  StiffnessParams theta;
  theta.K.resize(3, 2);
  theta.K << 50, 50, 400, 400, 100, 100;
  const Vec lambda = Vec::Ones(2);
  for (auto _ : state)
    benchmark::DoNotOptimize(icsld_estep(demo, theta, 1e-5, 3, lambda));
}
BENCHMARK(bm_estep);

void bm_gp_fit(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  RandomStream stream(4, "bench-gp");
  Mat x(n, 4);
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = stream.uniform();
    y[i] = std::sin(5.0 * x(i, 0)) + x(i, 1) * x(i, 2);
  }
  for (auto _ : state) {
    RandomStream fit(5, "bench-fit");
    benchmark::DoNotOptimize(gp_fit(x, y, fit));
  }
}
BENCHMARK(bm_gp_fit)->Arg(20)->Arg(60)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
