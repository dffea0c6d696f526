#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "stiffopt/segment.hpp"
#include "test_util.hpp"

using namespace stiffopt;
using testutil::zero_residual_trajectory;

namespace {

// All monotone label sequences with s_1 = 1, s_T = M, every label used,
// enumerated by boundary placement; used as the exact E-step oracle.
void enumerate_segmentations(int T, int M, std::vector<Segmentation>& out) {
  std::vector<int> bounds(M - 1);
  std::function<void(int, int)> rec = [&](int idx, int lo) {
    if (idx == M - 1) {
      Segmentation seg;
      seg.M = M;
      seg.labels.resize(T);
      int b = 0;
      for (int t = 0; t < T; ++t) {
        while (b < M - 1 && t >= bounds[b]) ++b;
        seg.labels[t] = b + 1;
      }
      out.push_back(seg);
      return;
    }
    for (int b = lo; b <= T - (M - 1 - idx); ++b) {
      bounds[idx] = b;
      rec(idx + 1, b + 1);
    }
  };
  if (M == 1) {
    Segmentation seg;
    seg.M = 1;
    seg.labels.assign(T, 1);
    out.push_back(seg);
    return;
  }
  rec(0, 1);
}

Trajectory three_phase_synthetic(RandomStream& stream, double noise = 0.0) {
  Mat k(3, 2);
  k << 50, 50, 400, 400, 100, 100;
  return zero_residual_trajectory(k, {40, 70}, 120, 0.02, Vec::Ones(2), stream,
                                  20.0, noise);
}

}  // namespace

TEST_CASE("icsld_residual: zero on a trajectory generated by the model") {
  RandomStream stream(1, "zr");
  Mat k(1, 2);
  k << 300, 80;
  Trajectory traj =
      zero_residual_trajectory(k, {}, 50, 0.02, Vec::Ones(2), stream);
  for (int t = 1; t + 1 < traj.length(); ++t) {
    Vec r = icsld_residual(traj, t, k.row(0).transpose(), Vec::Ones(2), traj.dt);
    CHECK(r.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("icsld_residual: static trajectory with no force has zero residual") {
  Trajectory traj;
  traj.dt = 0.05;
  traj.n_axes = 1;
  traj.x = Mat::Constant(10, 1, 0.4);
  traj.F = Mat::Zero(10, 1);
  traj.reconstruct_velocities();
  Vec r = icsld_residual(traj, 4, Vec::Constant(1, 10.0), Vec::Ones(1), traj.dt);
  CHECK(r.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("icsld_residual: scalar hand computation") {
  // xdot_t = 1, xdot_{t+1} = 1, dx = 0.1, F = 0, k = 4, lambda = 1, dt = 0.1:
  // delta = 0 - (4 * 0.1 - 2 * 2 * 1) * 0.1 = 0.36.
  Trajectory traj;
  traj.dt = 0.1;
  traj.n_axes = 1;
  traj.x.resize(4, 1);
  traj.x << 0.0, 0.1, 0.2, 0.3;
  traj.F = Mat::Zero(4, 1);
  traj.reconstruct_velocities();
  Vec r = icsld_residual(traj, 1, Vec::Constant(1, 4.0), Vec::Ones(1), traj.dt);
  CHECK(r[0] == doctest::Approx(0.36));
}

TEST_CASE("icsld_residual: inertia scales only the impedance term") {
  // With x static and xdot = 0, the residual is -F dt / lambda, so scaling
  // lambda by c scales the residual by 1/c.
  Trajectory traj;
  traj.dt = 0.05;
  traj.n_axes = 1;
  traj.x = Mat::Constant(12, 1, 0.3);
  traj.F = Mat::Constant(12, 1, 2.0);
  traj.reconstruct_velocities();
  Vec a = icsld_residual(traj, 5, Vec::Constant(1, 321.0), Vec::Ones(1), traj.dt);
  Vec b = icsld_residual(traj, 5, Vec::Constant(1, 321.0), Vec::Constant(1, 4.0),
                         traj.dt);
  CHECK(a[0] == doctest::Approx(-2.0 * 0.05).epsilon(1e-12));
  CHECK(b[0] == doctest::Approx(a[0] / 4.0).epsilon(1e-12));
}

TEST_CASE("segment_objective: zero residuals and kappa monotonicity") {
  RandomStream stream(4, "so");
  Mat k(1, 1);
  k << 200;
  Trajectory traj = zero_residual_trajectory(k, {}, 30, 0.02, Vec::Ones(1), stream);
  Segmentation seg = Segmentation::uniform(traj.length(), 1);
  StiffnessParams theta =
      StiffnessParams::from_flat(Vec::Constant(1, 200.0), 1, 1, StiffnessBounds{});
  // kappa = 0 would be rejected by config validation, but the objective
  // itself accepts it; with zero residuals it is exactly 0.
  CHECK(segment_objective(traj, seg, theta, 0.0, Vec::Ones(1)) ==
        doctest::Approx(0.0));
  // log k > 0, so doubling kappa strictly decreases the objective.
  const double j1 = segment_objective(traj, seg, theta, 1e-5, Vec::Ones(1));
  const double j2 = segment_objective(traj, seg, theta, 2e-5, Vec::Ones(1));
  CHECK(j2 < j1);
}

TEST_CASE("icsld_estep: exact argmax versus exhaustive enumeration") {
  RandomStream stream(5, "estep");
  for (int trial = 0; trial < 6; ++trial) {
    const int T = 20 + static_cast<int>(stream.uniform_index(11));  // <= 30
    const int M = 2 + trial % 2;                                    // 2 or 3
    Mat k(M, 1);
    for (int j = 0; j < M; ++j) k(j, 0) = 30.0 * (j + 1) + trial;
    std::vector<int> bounds;
    for (int j = 1; j < M; ++j) bounds.push_back(j * T / M);
    Trajectory traj = zero_residual_trajectory(k, bounds, T, 0.02, Vec::Ones(1),
                                               stream, 1.0, 1e-4);
    StiffnessParams theta;
    theta.K = k;
    Segmentation got = icsld_estep(traj, theta, 1e-5, M, Vec::Ones(1));
    const double got_obj = segment_objective(traj, got, theta, 1e-5, Vec::Ones(1));

    std::vector<Segmentation> all;
    enumerate_segmentations(T, M, all);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& seg : all)
      best = std::max(best,
                      segment_objective(traj, seg, theta, 1e-5, Vec::Ones(1)));
    CHECK(got_obj == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("icsld_estep: M = 1 labels everything 1, beats random segmentations") {
  RandomStream stream(6, "m1");
  Mat k(1, 1);
  k << 120;
  Trajectory traj = zero_residual_trajectory(k, {}, 25, 0.02, Vec::Ones(1), stream);
  StiffnessParams theta;
  theta.K = k;
  Segmentation seg = icsld_estep(traj, theta, 1e-5, 1, Vec::Ones(1));
  for (int label : seg.labels) CHECK(label == 1);

  // Two-phase version must beat 200 random valid segmentations.
  Mat k2(2, 1);
  k2 << 60, 500;
  Trajectory traj2 =
      zero_residual_trajectory(k2, {12}, 25, 0.02, Vec::Ones(1), stream, 1.0, 1e-4);
  StiffnessParams theta2;
  theta2.K = k2;
  Segmentation dp = icsld_estep(traj2, theta2, 1e-5, 2, Vec::Ones(1));
  const double dp_obj = segment_objective(traj2, dp, theta2, 1e-5, Vec::Ones(1));
  for (int i = 0; i < 200; ++i) {
    const int b = 1 + static_cast<int>(stream.uniform_index(24));
    Segmentation rnd;
    rnd.M = 2;
    rnd.labels.resize(25);
    for (int t = 0; t < 25; ++t) rnd.labels[t] = t < b ? 1 : 2;
    CHECK(dp_obj >=
          segment_objective(traj2, rnd, theta2, 1e-5, Vec::Ones(1)) - 1e-12);
  }
}

TEST_CASE("icsld_estep: infeasible M raises") {
  RandomStream stream(7, "inf");
  Mat k(1, 1);
  k << 100;
  Trajectory traj = zero_residual_trajectory(k, {}, 5, 0.02, Vec::Ones(1), stream);
  StiffnessParams theta;
  theta.K = Mat::Constant(5, 1, 100.0);
  CHECK_THROWS_AS(icsld_estep(traj, theta, 1e-5, 5, Vec::Ones(1)),
                  InfeasibleSegmentCountError);
}

TEST_CASE("icsld_mstep: recovers the generating stiffness") {
  RandomStream stream(8, "mstep");
  Mat k(1, 1);
  k << 200;
  Trajectory traj =
      zero_residual_trajectory(k, {}, 60, 0.02, Vec::Ones(1), stream, 20.0);
  Segmentation seg = Segmentation::uniform(traj.length(), 1);
  MStepResult res = icsld_mstep(traj, seg, 1e-5, StiffnessBounds{}, Vec::Ones(1));
  CHECK(res.theta.K(0, 0) > 180.0);
  CHECK(res.theta.K(0, 0) < 220.0);
}

TEST_CASE("icsld_mstep: closed-form optimum when residuals do not depend on k") {
  // Static positions with nonzero forces: r_t = -F_t dt / lambda for every k,
  // so the optimum is k* = sum r^2 / (kappa n) clamped to the bounds.
  Trajectory traj;
  traj.dt = 0.05;
  traj.n_axes = 1;
  const int T = 22;
  traj.x = Mat::Constant(T, 1, 0.1);
  traj.F.resize(T, 1);
  for (int t = 0; t < T; ++t) traj.F(t, 0) = 0.2 + 0.01 * t;
  traj.reconstruct_velocities();
  Segmentation seg = Segmentation::uniform(T, 1);
  const double kappa = 1e-5;
  double sum_r2 = 0.0;
  for (int t = 1; t + 1 < T; ++t) {
    const double r = -traj.F(t, 0) * traj.dt;
    sum_r2 += r * r;
  }
  const int n = T - 2;
  const double k_star =
      std::clamp(sum_r2 / (kappa * n), 10.0, 1000.0);
  MStepResult res = icsld_mstep(traj, seg, kappa, StiffnessBounds{}, Vec::Ones(1));
  CHECK(res.theta.K(0, 0) == doctest::Approx(k_star).epsilon(1e-4));
}

TEST_CASE("icsld_mstep: huge kappa drives the estimate to K_min, flagged") {
  RandomStream stream(9, "bigk");
  Mat k(1, 1);
  k << 500;
  Trajectory traj = zero_residual_trajectory(k, {}, 40, 0.02, Vec::Ones(1), stream);
  Segmentation seg = Segmentation::uniform(traj.length(), 1);
  MStepResult res = icsld_mstep(traj, seg, 1e6, StiffnessBounds{}, Vec::Ones(1));
  CHECK(res.theta.K(0, 0) == doctest::Approx(10.0));
  CHECK(res.clamped);
}

TEST_CASE("icsld_fit: recovers the three-phase synthetic trajectory") {
  RandomStream gen(77, "gen");
  Trajectory traj = three_phase_synthetic(gen);
  SegmentOptions opts;
  opts.M = 3;
  opts.kappa = 1e-5;
  RandomStream fit(78, "fit");
  ICSLDModel model = icsld_fit(traj, opts, fit);
  auto bounds = model.segmentation.boundaries();
  REQUIRE(bounds.size() == 2);
  CHECK(std::abs(bounds[0] - 40) <= 3);
  CHECK(std::abs(bounds[1] - 70) <= 3);
  const double want[3] = {50, 400, 100};
  for (int j = 0; j < 3; ++j)
    for (int a = 0; a < 2; ++a)
      CHECK(std::abs(model.stiffness.K(j, a) - want[j]) / want[j] <= 0.15);
}

TEST_CASE("prior_from_segmentation: matches the model and the ground truth") {
  RandomStream gen(79, "gen2");
  Trajectory traj = three_phase_synthetic(gen);
  SegmentOptions opts;
  opts.M = 3;
  RandomStream fit(80, "fit2");
  ICSLDModel model = icsld_fit(traj, opts, fit);
  MStepResult again = prior_from_segmentation(traj, model.segmentation, opts.kappa,
                                              opts.bounds, Vec::Ones(2));
  CHECK((again.theta.K - model.stiffness.K).cwiseAbs().maxCoeff() <= 1e-6);

  Segmentation truth;
  truth.M = 3;
  truth.labels.resize(120);
  for (int t = 0; t < 120; ++t) truth.labels[t] = t < 40 ? 1 : (t < 70 ? 2 : 3);
  MStepResult res =
      prior_from_segmentation(traj, truth, 1e-5, StiffnessBounds{}, Vec::Ones(2));
  const double want[3] = {50, 400, 100};
  for (int j = 0; j < 3; ++j)
    for (int a = 0; a < 2; ++a)
      CHECK(std::abs(res.theta.K(j, a) - want[j]) / want[j] <= 0.15);
}

TEST_CASE("prior_from_segmentation: degenerate two-step segment does not crash") {
  RandomStream gen(81, "gen3");
  Mat k(1, 1);
  k << 100;
  Trajectory traj = zero_residual_trajectory(k, {}, 20, 0.02, Vec::Ones(1), gen);
  Segmentation seg;
  seg.M = 2;
  seg.labels.assign(20, 2);
  seg.labels[0] = 1;
  seg.labels[1] = 1;  // two-step first segment, no interior residual
  MStepResult res =
      prior_from_segmentation(traj, seg, 1e-5, StiffnessBounds{}, Vec::Ones(1));
  CHECK(res.theta.K(0, 0) >= 10.0);
  CHECK(res.theta.K(0, 0) <= 1000.0);
}

TEST_CASE("gmm_fit: M = 1 trivial, separated clusters recovered, monotone") {
  RandomStream gen(82, "gmm");
  Mat k(2, 1);
  k << 40, 800;
  Trajectory traj =
      zero_residual_trajectory(k, {30}, 60, 0.02, Vec::Ones(1), gen, 1.0, 1e-5);
  RandomStream fit(83, "gmmfit");
  GMMResult one = gmm_fit(traj, 1, 50, 1e-8, fit);
  for (int label : one.segmentation.labels) CHECK(label == 1);

  // Two well-separated feature clusters along the force axis (free motion,
  // then contact), with positional jitter so covariances stay non-singular.
  Trajectory clusters;
  clusters.dt = 0.05;
  clusters.n_axes = 1;
  const int T = 80;
  clusters.x.resize(T, 1);
  clusters.F.resize(T, 1);
  for (int t = 0; t < T; ++t) {
    clusters.x(t, 0) = 1e-3 * std::sin(1.3 * t);
    clusters.F(t, 0) = (t < 40 ? 0.0 : 5.0) + 1e-2 * std::cos(0.9 * t);
  }
  clusters.reconstruct_velocities();
  RandomStream fit2(84, "gmmfit2");
  GMMResult two = gmm_fit(clusters, 2, 100, 1e-8, fit2);
  CHECK_NOTHROW(two.segmentation.validate());
  auto bnd = two.segmentation.boundaries();
  REQUIRE(bnd.size() == 1);
  CHECK(std::abs(bnd[0] - 40) <= 2);
}

namespace {

// Synthesize from the baseline family with recorded velocities:
//   xdot_{t+1} = a_j xdot_t + b_j dx_t + b'_j F_t + noise,
//   x_{t+1}    = x_t + xdot_t dt  (so dx_t = xdot_t dt).
Trajectory sld_synthetic(const std::vector<double>& a, const std::vector<double>& b,
                         const std::vector<double>& bp, const std::vector<int>& bounds,
                         int T, double dt, RandomStream& stream, double noise) {
  Trajectory traj;
  traj.dt = dt;
  traj.n_axes = 1;
  traj.x.resize(T, 1);
  traj.F.resize(T, 1);
  traj.xdot.resize(T, 1);
  traj.x(0, 0) = 0.0;
  traj.xdot(0, 0) = 0.05;
  for (int t = 0; t < T; ++t) traj.F(t, 0) = std::sin(0.31 * t + 0.4);
  for (int t = 0; t + 1 < T; ++t) {
    std::size_t j = 0;
    while (j < bounds.size() && t >= bounds[j]) ++j;
    const double dx = traj.xdot(t, 0) * dt;
    traj.x(t + 1, 0) = traj.x(t, 0) + dx;
    traj.xdot(t + 1, 0) = a[j] * traj.xdot(t, 0) + b[j] * dx + bp[j] * traj.F(t, 0) +
                          (noise > 0 ? stream.normal(0.0, noise) : 0.0);
  }
  traj.has_velocities = true;
  return traj;
}

}  // namespace

TEST_CASE("sld_fit: recovers a single linear model and a two-regime boundary") {
  RandomStream gen(85, "sld");
  // Noiseless single regime: the fit reproduces the dynamics exactly.  The
  // regressors xdot and dx are collinear here (dx = xdot dt), so compare the
  // effective velocity gain a + b dt and the force gain, not a and b alone.
  Trajectory one = sld_synthetic({0.82}, {0.0}, {0.05}, {}, 60, 0.05, gen, 0.0);
  RandomStream fit(86, "sldfit");
  SLDResult res = sld_fit(one, 1, 50, 1e-10, fit);
  CHECK(res.model.a(0, 0) + res.model.b(0, 0) * one.dt ==
        doctest::Approx(0.82).epsilon(1e-6));
  CHECK(res.model.bp(0, 0) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(res.model.noise_var(0, 0) <= 1e-10);

  // Two clearly different regimes with small noise: boundary recovered.
  RandomStream gen2(87, "sld2");
  Trajectory two = sld_synthetic({0.9, -0.5}, {0.0, 0.0}, {0.02, 0.3}, {25}, 50,
                                 0.05, gen2, 1e-4);
  RandomStream fit2(88, "sldfit2");
  SLDResult seg2 = sld_fit(two, 2, 100, 1e-10, fit2);
  auto bnd = seg2.segmentation.boundaries();
  REQUIRE(bnd.size() == 1);
  CHECK(std::abs(bnd[0] - 25) <= 3);
}

TEST_CASE("EM objectives are non-decreasing across iterations (IC-SLD and SLD)") {
  // Verified through the public API by checking that more iterations never
  // produce a worse final objective on a mixed corpus.
  RandomStream gen(88, "corpus");
  for (int trial = 0; trial < 10; ++trial) {
    const int M = 1 + trial % 3;
    Mat k(M, 1);
    for (int j = 0; j < M; ++j)
      k(j, 0) = std::exp(gen.uniform(std::log(20.0), std::log(900.0)));
    std::vector<int> bounds;
    const int T = 60;
    for (int j = 1; j < M; ++j) bounds.push_back(j * T / M + int(gen.uniform_index(5)));
    Trajectory traj = zero_residual_trajectory(k, bounds, T, 0.02, Vec::Ones(1), gen,
                                               1.0, trial % 2 ? 1e-4 : 0.0);
    SegmentOptions opts;
    opts.M = M;
    double prev = -std::numeric_limits<double>::infinity();
    for (int iters : {1, 2, 5, 50}) {
      SegmentOptions o = opts;
      o.max_iters = iters;
      o.restarts = 1;
      RandomStream fit(100 + trial, "fit");
      ICSLDModel model = icsld_fit(traj, o, fit);
      CHECK(model.objective >= prev - 1e-9);
      prev = model.objective;
    }
  }
}
