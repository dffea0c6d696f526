#pragma once

#include <optional>
#include <vector>

#include "stiffopt/random.hpp"
#include "stiffopt/types.hpp"

namespace stiffopt {

struct InfeasibleSegmentCountError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ICSLDModel {
  StiffnessParams stiffness;  // K^pi, M x n_axes
  double kappa = 1e-5;
  Vec lambda;
  Segmentation segmentation;
  double objective = 0.0;
  bool clamped = false;  // some M-step optimum hit a stiffness bound
};

struct GMMModel {
  Vec weights;                // M
  Mat means;                  // M x dim, features (x, xdot, xddot, F)
  std::vector<Mat> covariances;
  double log_likelihood = 0.0;
};

struct SLDModel {
  // Per segment, per axis: xdot_{t+1} = a xdot_t + b dx_t + b' F_t + noise
  Mat a, b, bp;        // M x n_axes
  Mat noise_var;       // M x n_axes, floored at 1e-12
  Segmentation segmentation;
  double objective = 0.0;
};

struct SegmentOptions {
  int M = 2;
  double kappa = 1e-5;
  int max_iters = 50;
  double tol = 1e-8;
  int restarts = 5;
  StiffnessBounds bounds;
  Vec lambda;  // defaults to ones when empty
};

// IC-SLD velocity residual at interior index t (0-based, 1 <= t <= T-2):
//   dxdot[t] = xdot[t+1] - xdot[t]
//              - Lambda^{-1} (K dx[t] - 2 sqrt(K) xdot[t] + F[t]) dt
// with xdot from backward differences and dx[t] = x[t+1] - x[t].
Vec icsld_residual(const Trajectory& traj, int t, const Vec& k, const Vec& lambda,
                   double dt);

// Sum over interior t of -r^T K^{-1} r - kappa log det K for the assigned
// segment's stiffness.
double segment_objective(const Trajectory& traj, const Segmentation& seg,
                         const StiffnessParams& theta, double kappa,
                         const Vec& lambda);

// Exact left-to-right E-step: maximizing monotone label sequence with
// s_1 = 1, s_T = M and every label used, via boundary dynamic programming.
Segmentation icsld_estep(const Trajectory& traj, const StiffnessParams& theta,
                         double kappa, int M, const Vec& lambda);

struct MStepResult {
  StiffnessParams theta;
  bool clamped = false;
};

// Per-segment, per-axis maximization of
//   g(k) = -sum_t r_t(k)^2 / k - kappa n_j log k   over [K_min, K_max]
// by safeguarded Newton iteration on log k with numeric derivatives,
// multi-start, and a golden-section fallback.  `incumbent`, when given,
// is always among the candidates, so the objective never decreases.
MStepResult icsld_mstep(const Trajectory& traj, const Segmentation& seg, double kappa,
                        StiffnessBounds bounds, const Vec& lambda,
                        const std::optional<StiffnessParams>& incumbent = std::nullopt);

ICSLDModel icsld_fit(const Trajectory& traj, const SegmentOptions& opts,
                     RandomStream& stream);

// One M-step on a fixed segmentation; how baselines get their K^pi prior.
MStepResult prior_from_segmentation(const Trajectory& traj, const Segmentation& seg,
                                    double kappa, StiffnessBounds bounds,
                                    const Vec& lambda);

struct GMMResult {
  GMMModel model;
  Segmentation segmentation;
};
GMMResult gmm_fit(const Trajectory& traj, int M, int max_iters, double tol,
                  RandomStream& stream);

struct SLDResult {
  SLDModel model;
  Segmentation segmentation;
};
SLDResult sld_fit(const Trajectory& traj, int M, int max_iters, double tol,
                  RandomStream& stream);

// Feature matrix xi_t = (x, xdot, xddot, F) with central differences
// (one-sided at the endpoints); used by the GMM baseline.
Mat gmm_features(const Trajectory& traj);

}  // namespace stiffopt
