#include "stiffopt/sim.hpp"

#include <algorithm>
#include <cmath>

namespace stiffopt {

ImpedanceConfig ImpedanceConfig::unit(int n_axes, double dt, double dt_sim) {
  ImpedanceConfig cfg;
  cfg.lambda = Vec::Ones(n_axes);
  cfg.dt = dt;
  cfg.dt_sim = dt_sim;
  cfg.n_axes = n_axes;
  return cfg;
}

IntegrationDivergedError::IntegrationDivergedError(int step_index_)
    : std::runtime_error("integration diverged at step " + std::to_string(step_index_)),
      step_index(step_index_) {}

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::wipe2d: return "wipe2d";
    case TaskKind::door1d: return "door1d";
    case TaskKind::track: return "track";
  }
  return "unknown";
}

TaskKind task_kind_from_string(const std::string& name) {
  if (name == "wipe2d") return TaskKind::wipe2d;
  if (name == "door1d") return TaskKind::door1d;
  if (name == "track") return TaskKind::track;
  throw std::invalid_argument("unknown task kind '" + name +
                              "' (valid: wipe2d, door1d, track)");
}

double TaskEnv::max_reward(int T) const {
  switch (kind) {
    case TaskKind::wipe2d: return static_cast<double>(dirt_sites.size());
    case TaskKind::door1d: return static_cast<double>(T);
    case TaskKind::track: return 0.0;
  }
  return 0.0;
}

TaskEnv TaskEnv::make_wipe2d() {
  TaskEnv env;
  env.kind = TaskKind::wipe2d;
  env.n_axes = 2;
  env.start = Vec::Zero(2);
  env.start << 0.0, 0.05;
  // Sites sit on the demonstrated wipe path, slightly inside the surface, so
  // each one is reachable only while the end-effector presses; during the
  // disturbance window a softened phase deflects past the contact radius and
  // misses them.  Four sites fall inside the disturbance window, one after.
  for (double sx : {0.00542, 0.05515, 0.09682, 0.13849, 0.22182}) {
    Vec site(2);
    site << sx, -0.0015;
    env.dirt_sites.push_back(site);
  }
  env.contact_radius = 0.003;
  env.surface_k = 500.0;
  Vec push(2);
  push << 0.0, 3.0;  // lifts the end-effector off the surface
  env.disturbance = Disturbance{push, 40, 80};
  return env;
}

TaskEnv TaskEnv::make_door1d() {
  TaskEnv env;
  env.kind = TaskKind::door1d;
  env.n_axes = 1;
  env.start = Vec::Zero(1);
  env.latch_pos = 0.10;
  env.obstacle_k = 500.0;
  env.release_force = 8.0;
  env.open_pos = 0.15;
  Vec resist(1);
  resist << -3.0;  // opposes the push through the latch
  env.disturbance = Disturbance{resist, 40, 80};
  return env;
}

TaskEnv TaskEnv::make_track(Mat reference) {
  TaskEnv env;
  env.kind = TaskKind::track;
  env.n_axes = static_cast<int>(reference.cols());
  env.start = reference.row(0).transpose();
  env.reference = std::move(reference);
  return env;
}

EnvRuntime::EnvRuntime(const TaskEnv& env)
    : collected(env.dirt_sites.size(), false) {}

Vec EnvRuntime::force(const TaskEnv& env, const Vec& x, int control_step) {
  Vec f = Vec::Zero(env.n_axes);
  switch (env.kind) {
    case TaskKind::wipe2d: {
      if (x[1] < 0.0) f[1] = -env.surface_k * x[1];
      for (std::size_t i = 0; i < env.dirt_sites.size(); ++i) {
        if (collected[i]) continue;
        if ((x - env.dirt_sites[i]).norm() <= env.contact_radius) {
          collected[i] = true;
          ++newly_collected_;
        }
      }
      break;
    }
    case TaskKind::door1d: {
      if (!latch_released && x[0] > env.latch_pos) {
        const double contact = env.obstacle_k * (x[0] - env.latch_pos);
        if (contact >= env.release_force) {
          latch_released = true;
        } else {
          f[0] = -contact;
        }
      }
      break;
    }
    case TaskKind::track:
      break;
  }
  if (env.disturbance.active(control_step)) f += env.disturbance.force;
  return f;
}

int EnvRuntime::pending_dirt_reward() {
  const int n = newly_collected_;
  newly_collected_ = 0;
  return n;
}

ImpedanceState step(const ImpedanceState& state, const Vec& x_d, const Vec& k,
                    const Vec& f_env, const ImpedanceConfig& cfg, int step_index) {
  ImpedanceState next;
  const Vec damping = 2.0 * k.array().sqrt();
  const Vec accel = (k.array() * (x_d - state.x).array() -
                     damping.array() * state.xdot.array() + f_env.array()) /
                    cfg.lambda.array();
  next.x = state.x + state.xdot * cfg.dt_sim;
  next.xdot = state.xdot + accel * cfg.dt_sim;
  if (!next.x.allFinite() || !next.xdot.allFinite())
    throw IntegrationDivergedError(step_index);
  return next;
}

namespace {

int substeps_per_control(const ImpedanceConfig& cfg) {
  const double ratio = cfg.dt / cfg.dt_sim;
  const int m = static_cast<int>(std::lround(ratio));
  if (m < 1 || std::abs(ratio - m) > 1e-6)
    throw std::invalid_argument("dt_sim must divide the control period dt evenly");
  return m;
}

}  // namespace

RolloutResult rollout(const TaskEnv& env, const Segmentation& seg,
                      const StiffnessParams& theta,
                      const AttractorTrajectory& attractors,
                      const ImpedanceConfig& cfg, RandomStream& /*stream*/) {
  const int T = static_cast<int>(attractors.x.rows());
  if (seg.length() != T)
    throw std::invalid_argument("rollout: attractor length must match segmentation");
  theta.validate();
  const int m = substeps_per_control(cfg);

  RolloutResult out;
  out.trajectory.dt = cfg.dt;
  out.trajectory.n_axes = env.n_axes;
  out.trajectory.x = Mat::Zero(T, env.n_axes);
  out.trajectory.F = Mat::Zero(T, env.n_axes);
  out.trajectory.xdot = Mat::Zero(T, env.n_axes);
  out.trajectory.has_velocities = true;
  out.rewards = Vec::Zero(T);

  EnvRuntime runtime(env);
  ImpedanceState state{env.start, Vec::Zero(env.n_axes)};

  for (int t = 0; t < T; ++t) {
    const Vec x_d = attractors.x.row(t).transpose();
    const Vec k = theta.stiffness(seg.labels[static_cast<std::size_t>(t)]);
    for (int s = 0; s < m; ++s) {
      const Vec f = runtime.force(env, state.x, t);
      if (s == 0) {
        out.trajectory.x.row(t) = state.x.transpose();
        out.trajectory.xdot.row(t) = state.xdot.transpose();
        out.trajectory.F.row(t) = f.transpose();
      }
      state = step(state, x_d, k, f, cfg, t);
    }
    switch (env.kind) {
      case TaskKind::wipe2d:
        out.rewards[t] = runtime.pending_dirt_reward();
        break;
      case TaskKind::door1d:
        out.rewards[t] = (runtime.latch_released && state.x[0] >= env.open_pos) ? 1.0 : 0.0;
        break;
      case TaskKind::track: {
        const Vec err = out.trajectory.x.row(t).transpose() - env.reference.row(t).transpose();
        out.rewards[t] = -err.squaredNorm();
        break;
      }
    }
  }
  return out;
}

AttractorTrajectory compute_attractors(const Trajectory& demo, const Segmentation& seg,
                                       const StiffnessParams& theta,
                                       const ImpedanceConfig& cfg) {
  demo.validate();
  theta.validate();
  const int T = demo.length();
  if (seg.length() != T)
    throw std::invalid_argument("compute_attractors: segmentation length mismatch");

  // Forward differences; v exact for t <= T-2, a exact for t <= T-3.
  Mat v = Mat::Zero(T, demo.n_axes);
  for (int t = 0; t < T - 1; ++t) v.row(t) = (demo.x.row(t + 1) - demo.x.row(t)) / demo.dt;
  v.row(T - 1) = v.row(T - 2);
  Mat a = Mat::Zero(T, demo.n_axes);
  for (int t = 0; t < T - 2; ++t) a.row(t) = (v.row(t + 1) - v.row(t)) / demo.dt;
  a.row(T - 2) = a.row(T > 2 ? T - 3 : 0);
  a.row(T - 1) = a.row(T - 2);

  AttractorTrajectory out;
  out.dt = demo.dt;
  out.x = Mat::Zero(T, demo.n_axes);
  for (int t = 0; t < T; ++t) {
    const Vec k = theta.stiffness(seg.labels[static_cast<std::size_t>(t)]);
    const Vec num = 2.0 * k.array().sqrt() * v.row(t).transpose().array() +
                    cfg.lambda.array() * a.row(t).transpose().array() -
                    demo.F.row(t).transpose().array();
    out.x.row(t) = (demo.x.row(t).transpose() + (num.array() / k.array()).matrix()).transpose();
  }
  return out;
}

DemoScript default_script(const TaskEnv& env) {
  DemoScript script;
  script.duration = 6.0;
  switch (env.kind) {
    case TaskKind::door1d: {
      script.waypoints = Mat(5, 1);
      script.waypoints << 0.0, 0.0, 0.08, 0.13, 0.25;
      script.hold_times = Vec(5);
      script.hold_times << 0.0, 0.5, 2.0, 3.5, 5.0;
      break;
    }
    case TaskKind::wipe2d: {
      // Descent timed so the first contact-force sample lands one control
      // step before the evaluation disturbance window opens.
      script.waypoints = Mat(4, 2);
      script.waypoints << 0.0, 0.05,
                          0.0, -0.004,
                          0.30, -0.004,
                          0.30, 0.02;
      script.hold_times = Vec(4);
      script.hold_times << 0.0, 2.0, 5.6, 6.0;
      break;
    }
    case TaskKind::track: {
      // Smooth planar arc.
      const int W = 13;
      script.waypoints = Mat(W, env.n_axes);
      script.hold_times = Vec(W);
      for (int i = 0; i < W; ++i) {
        const double u = static_cast<double>(i) / (W - 1);
        script.hold_times[i] = 5.0 * u;
        for (int axis = 0; axis < env.n_axes; ++axis) {
          script.waypoints(i, axis) =
              axis == 0 ? 0.25 * u : 0.08 * std::sin(3.14159265358979323846 * u);
        }
      }
      break;
    }
  }
  return script;
}

namespace {

Vec script_attractor(const DemoScript& script, double time) {
  const int W = static_cast<int>(script.waypoints.rows());
  if (time <= script.hold_times[0]) return script.waypoints.row(0).transpose();
  for (int i = 1; i < W; ++i) {
    if (time <= script.hold_times[i]) {
      const double t0 = script.hold_times[i - 1];
      const double t1 = script.hold_times[i];
      const double u = t1 > t0 ? (time - t0) / (t1 - t0) : 1.0;
      return ((1.0 - u) * script.waypoints.row(i - 1) + u * script.waypoints.row(i))
          .transpose();
    }
  }
  return script.waypoints.row(W - 1).transpose();
}

}  // namespace

Trajectory generate_demonstration(const TaskEnv& env, const DemoScript& script,
                                  const ImpedanceConfig& cfg, RandomStream& stream,
                                  double noise_std) {
  const int m = substeps_per_control(cfg);
  const int T = static_cast<int>(std::lround(script.duration / cfg.dt));
  if (T < 3) throw std::invalid_argument("generate_demonstration: duration too short");
  const Vec k = Vec::Constant(env.n_axes, script.stiffness);

  // Demonstrations are collected without the evaluation disturbance.
  TaskEnv calm = env;
  calm.disturbance = Disturbance{};

  Trajectory demo;
  demo.dt = cfg.dt;
  demo.n_axes = env.n_axes;
  demo.x = Mat::Zero(T, env.n_axes);
  demo.F = Mat::Zero(T, env.n_axes);
  demo.xdot = Mat::Zero(T, env.n_axes);

  EnvRuntime runtime(calm);
  ImpedanceState state{script.waypoints.row(0).transpose(), Vec::Zero(env.n_axes)};
  for (int t = 0; t < T; ++t) {
    const Vec x_d = script_attractor(script, t * cfg.dt);
    for (int s = 0; s < m; ++s) {
      const Vec f = runtime.force(calm, state.x, t);
      if (s == 0) {
        demo.x.row(t) = state.x.transpose();
        demo.F.row(t) = f.transpose();
        demo.xdot.row(t) = state.xdot.transpose();
      }
      state = step(state, x_d, k, f, cfg, t);
    }
  }
  if (noise_std > 0.0) {
    for (int t = 0; t < T; ++t)
      for (int axis = 0; axis < env.n_axes; ++axis)
        demo.x(t, axis) += stream.normal(0.0, noise_std);
  }
  // Velocities are recorded from the simulator state (the measured-velocity
  // channel of a real robot), not differenced from the noisy positions.
  demo.has_velocities = true;
  return demo;
}

}  // namespace stiffopt
