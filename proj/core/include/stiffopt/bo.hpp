#pragma once

#include <optional>
#include <vector>

#include "stiffopt/gp.hpp"
#include "stiffopt/random.hpp"
#include "stiffopt/types.hpp"

namespace stiffopt {

// Bijection between bounded stiffness vectors and the unit cube; internal
// coordinates are log-stiffness affinely mapped to [0, 1].
struct SearchSpace {
  int dim = 1;
  StiffnessBounds bounds;

  Vec to_cube(const Vec& k) const;
  Vec from_cube(const Vec& u) const;
};

// Per-dimension Gaussian prior over stiffness centered on the IC-SLD
// estimate K^pi, truncated to the bounds when sampling.  `log_scale`
// rescales the density by a constant (argmax-invariant); `flat` makes the
// density constant and the sampler uniform in cube coordinates.
struct StiffnessPrior {
  Vec mean_k;   // d entries, N/m
  Vec sigma_k;  // d entries, > 0 (floored at 0.1 (K_max - K_min))
  double beta = 1.0;
  StiffnessBounds bounds;
  bool flat = false;
  double log_scale = 0.0;

  static StiffnessPrior from_icsld(const Vec& k_pi, double beta, StiffnessBounds bounds);

  double log_density(const Vec& k) const;
  // Inverse-CDF sampling: one uniform per dimension -> cube coordinates.
  Vec sample_cube(const Vec& u, const SearchSpace& space) const;
  Vec mean_cube(const SearchSpace& space) const;
};

double normal_cdf(double x);
double normal_quantile(double p);

// Exact bi-objective hypervolume (staircase area) above reference r;
// dominated and duplicate points contribute nothing.
double hypervolume(const std::vector<ObjectivePoint>& front, const ObjectivePoint& r);

struct Surrogate {
  GpModel task;
  GpModel comp;
};

// Optional hyperparameter warm-start across suggest calls: a full marginal
// likelihood search runs only every refit_period evaluations, with cheap
// fixed-hyperparameter refits in between.
struct SurrogateCache {
  bool valid = false;
  int fitted_n = 0;
  GpHyperparams task;
  GpHyperparams comp;
};

// Monte-Carlo expected hypervolume improvement from explicit predictive
// moments; `z` holds n_samples x 2 standard-normal draws.
double ehvi_from_moments(double mu_task, double var_task, double mu_comp,
                         double var_comp, const std::vector<ObjectivePoint>& front,
                         const ObjectivePoint& r, const Mat& z);

double ehvi_mc(const Vec& candidate, const Surrogate& model,
               const std::vector<ObjectivePoint>& front, const ObjectivePoint& r,
               int n_samples, RandomStream& stream);

// pi-BO decaying prior weight pi(theta)^(beta/n); beta = 0 returns exactly 1.
double pibo_weight(const Vec& k, const StiffnessPrior& prior, int n);

struct BoDataset {
  Mat X;  // n x d cube coordinates
  std::vector<ObjectivePoint> y;  // normalized objectives
};

struct SuggestResult {
  Vec u;  // cube coordinates
  bool surrogate_fallback = false;
};

// Fits the surrogate on D, scores a candidate pool of `budget` points
// (half prior-sampled, half uniform) by EHVI x prior weight, refines the
// 8 best by shrinking coordinate-wise perturbation, and returns the
// argmax (ties by earliest index).  `prior` may be null (unweighted).
SuggestResult suggest(const BoDataset& data, const std::vector<ObjectivePoint>& front,
                      const ObjectivePoint& r, const StiffnessPrior* prior, int n,
                      int budget, int ehvi_samples, const SearchSpace& space,
                      RandomStream& stream, SurrogateCache* cache = nullptr,
                      int refit_period = 8);

}  // namespace stiffopt
