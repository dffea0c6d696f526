#pragma once

#include "stiffopt/random.hpp"
#include "stiffopt/types.hpp"

namespace stiffopt {

struct SurrogateFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Gaussian-process posterior with a Matern-5/2 ARD kernel over unit-cube
// inputs.  Targets are standardized internally unless constructed with
// gp_fit_fixed(..., standardize=false).
struct GpModel {
  Mat X;               // n x d training inputs
  Vec y;               // standardized targets
  double y_mean = 0.0;
  double y_std = 1.0;
  Vec log_ls;          // per-dimension log lengthscales
  double log_sf2 = 0.0;  // log signal variance
  double log_sn2 = std::log(1e-4);  // log noise variance (>= 1e-6)
  Mat chol_l;          // Cholesky factor of K + sn2 I (+ jitter)
  Vec alpha;           // (K + sn2 I)^{-1} y
  double log_marginal = 0.0;

  int dim() const { return static_cast<int>(X.cols()); }
  int size() const { return static_cast<int>(X.rows()); }
};

double matern52(const Vec& a, const Vec& b, const Vec& log_ls, double log_sf2);

struct GpHyperparams {
  Vec log_ls;
  double log_sf2 = 0.0;
  double log_sn2 = std::log(1e-4);
};

// Hyperparameters maximize the log marginal likelihood by multi-start
// coordinate search on log hyperparameters (5 starts, up to 100 accepted
// or rejected proposals each, early exit on convergence).  Throws
// SurrogateFitError when the kernel stays non-PSD after jitter escalation.
GpModel gp_fit(const Mat& X, const Vec& y, RandomStream& stream);

// Fixed hyperparameters; no search.  Used by tests and degenerate cases.
GpModel gp_fit_fixed(const Mat& X, const Vec& y, const Vec& log_ls, double log_sf2,
                     double log_sn2, bool standardize = true);

// Posterior (mean, variance) in the original target units.
std::pair<double, double> gp_predict(const GpModel& gp, const Vec& x);

// Batched prediction: one column of mu/var per query row.
void gp_predict_batch(const GpModel& gp, const Mat& Xq, Vec& mu, Vec& var);

double gp_log_marginal(const GpModel& gp);

}  // namespace stiffopt
