#pragma once

#include <string>
#include <vector>

#include "stiffopt/random.hpp"
#include "stiffopt/types.hpp"

namespace stiffopt {

struct ImpedanceState {
  Vec x;
  Vec xdot;
};

struct ImpedanceConfig {
  Vec lambda;           // diagonal Cartesian inertia, kg
  double dt_sim = 1e-3; // integrator step, s
  double dt = 0.05;     // control/sampling period, s
  int n_axes = 1;

  static ImpedanceConfig unit(int n_axes, double dt = 0.05, double dt_sim = 1e-3);
};

struct IntegrationDivergedError : std::runtime_error {
  explicit IntegrationDivergedError(int step_index);
  int step_index;
};

enum class TaskKind { wipe2d, door1d, track };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& name);

// Constant force applied by the environment during [t_begin, t_end)
// control steps of an evaluation rollout.  Demonstrations are always
// collected with the disturbance inactive, so it is the one effect the
// attractor compensation cannot cancel.
struct Disturbance {
  Vec force;       // N per axis (zero-sized means none)
  int t_begin = 0; // control-step window, half open
  int t_end = 0;

  bool active(int control_step) const {
    return force.size() > 0 && control_step >= t_begin && control_step < t_end;
  }
};

struct TaskEnv {
  TaskKind kind = TaskKind::track;
  int n_axes = 1;
  Vec start;  // initial end-effector position

  // wipe2d: dirt sites on the y=0 surface line; a spring with stiffness
  // surface_k pushes back (+y) while y < 0.
  std::vector<Vec> dirt_sites;
  double contact_radius = 0.01;
  double surface_k = 500.0;

  // door1d: latch spring at latch_pos along the single axis; releases
  // permanently once the contact force reaches release_force.
  double latch_pos = 0.10;
  double obstacle_k = 500.0;
  double release_force = 8.0;
  double open_pos = 0.15;

  // track: reference positions to reproduce (T x n_axes).
  Mat reference;

  Disturbance disturbance;

  // Largest attainable reward sum, used as the ideal-point default.
  double max_reward(int T) const;

  static TaskEnv make_wipe2d();
  static TaskEnv make_door1d();
  static TaskEnv make_track(Mat reference);
};

// Mutable per-episode environment state (latch engagement, collected
// dirt).  A fresh instance is created for every rollout.
struct EnvRuntime {
  bool latch_released = false;
  std::vector<bool> collected;

  explicit EnvRuntime(const TaskEnv& env);
  // Environment force on the end-effector at position x during the given
  // control step; updates latch/dirt state.
  Vec force(const TaskEnv& env, const Vec& x, int control_step);
  int pending_dirt_reward();  // newly collected sites since last call

 private:
  int newly_collected_ = 0;
};

struct AttractorTrajectory {
  double dt = 0.05;
  Mat x;  // T x n_axes commanded attractor positions
};

// One explicit-Euler step of the closed impedance model
//   xdot' = xdot + Lambda^{-1} (K (x_d - x) - 2 sqrt(K) xdot + F) dt_sim
//   x'    = x + xdot dt_sim          (pre-step velocity)
ImpedanceState step(const ImpedanceState& state, const Vec& x_d, const Vec& k,
                    const Vec& f_env, const ImpedanceConfig& cfg,
                    int step_index = -1);

struct RolloutResult {
  Trajectory trajectory;
  Vec rewards;  // one entry per control step
  double reward_sum() const { return rewards.sum(); }
};

// Zero-order-hold rollout: each (x_d[t], K_{s_t}) is held for
// dt / dt_sim integrator substeps; environment forces are recomputed per
// substep; rewards accumulate per control step.
RolloutResult rollout(const TaskEnv& env, const Segmentation& seg,
                      const StiffnessParams& theta,
                      const AttractorTrajectory& attractors,
                      const ImpedanceConfig& cfg, RandomStream& stream);

// Back-computes the attractor trajectory that reproduces `demo` under
// stiffness theta:
//   x_d[t] = x[t] + K^{-1} (2 sqrt(K) xdot[t] + Lambda xddot[t] - F[t])
// Velocities/accelerations come from forward differences of the recorded
// positions, which makes the formula the exact inverse of step() when
// dt_sim == dt; the trailing samples reuse the last interior values.
AttractorTrajectory compute_attractors(const Trajectory& demo, const Segmentation& seg,
                                       const StiffnessParams& theta,
                                       const ImpedanceConfig& cfg);

struct DemoScript {
  Mat waypoints;       // W x n_axes
  Vec hold_times;      // W entries: time (s) at which each waypoint is reached
  double stiffness = 1000.0;  // demonstration gain (defaults to K_max)
  double duration = 6.0;      // episode length, s
};

DemoScript default_script(const TaskEnv& env);

// Drives the simulator along the linearly interpolated waypoint schedule
// with a fixed high demonstration stiffness and records a trajectory at
// the control period.  The disturbance is inactive; optional Gaussian
// noise (noise_std > 0) is added to the recorded positions.
Trajectory generate_demonstration(const TaskEnv& env, const DemoScript& script,
                                  const ImpedanceConfig& cfg, RandomStream& stream,
                                  double noise_std = 0.0);

}  // namespace stiffopt
