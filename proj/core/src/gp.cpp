#include "stiffopt/gp.hpp"

#include <algorithm>
#include <cmath>

namespace stiffopt {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;
constexpr double kNoiseFloor = 1e-6;

double matern52_r2(double r2, double sf2) {
  const double r = std::sqrt(r2);
  const double s = kSqrt5 * r;
  return sf2 * (1.0 + s + 5.0 * r2 / 3.0) * std::exp(-s);
}

Mat kernel_matrix(const Mat& X, const Vec& log_ls, double log_sf2) {
  const int n = static_cast<int>(X.rows());
  const Vec inv_ls = (-log_ls.array()).exp();
  const double sf2 = std::exp(log_sf2);
  Mat scaled = X.array().rowwise() * inv_ls.transpose().array();
  Mat K(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = sf2;
    for (int j = i + 1; j < n; ++j) {
      const double r2 = (scaled.row(i) - scaled.row(j)).squaredNorm();
      K(i, j) = K(j, i) = matern52_r2(r2, sf2);
    }
  }
  return K;
}

// Cholesky with jitter escalation 1e-10 -> 1e-4; false when everything fails.
bool chol_with_jitter(const Mat& K, double sn2, Mat& L) {
  for (double jitter = 0.0; jitter <= 1e-4;
       jitter = jitter == 0.0 ? 1e-10 : jitter * 100.0) {
    Mat A = K;
    A.diagonal().array() += sn2 + jitter;
    Eigen::LLT<Mat> llt(A);
    if (llt.info() == Eigen::Success) {
      L = llt.matrixL();
      return true;
    }
    if (jitter >= 1e-4) break;
  }
  return false;
}

// Log marginal likelihood for given hyperparameters; -inf when non-PSD.
double log_marginal_for(const Mat& X, const Vec& y, const Vec& log_ls, double log_sf2,
                        double log_sn2, Mat* L_out = nullptr, Vec* alpha_out = nullptr) {
  const int n = static_cast<int>(X.rows());
  const Mat K = kernel_matrix(X, log_ls, log_sf2);
  Mat L;
  if (!chol_with_jitter(K, std::exp(log_sn2), L))
    return -std::numeric_limits<double>::infinity();
  const Vec w = L.triangularView<Eigen::Lower>().solve(y);
  const Vec alpha = L.transpose().triangularView<Eigen::Upper>().solve(w);
  double log_det = 0.0;
  for (int i = 0; i < n; ++i) log_det += std::log(L(i, i));
  const double lml =
      -0.5 * w.squaredNorm() - log_det - 0.5 * n * 1.8378770664093454836;
  if (L_out) *L_out = L;
  if (alpha_out) *alpha_out = alpha;
  return lml;
}

}  // namespace

double matern52(const Vec& a, const Vec& b, const Vec& log_ls, double log_sf2) {
  const Vec inv_ls = (-log_ls.array()).exp();
  const double r2 = ((a - b).array() * inv_ls.array()).matrix().squaredNorm();
  return matern52_r2(r2, std::exp(log_sf2));
}

GpModel gp_fit_fixed(const Mat& X, const Vec& y, const Vec& log_ls, double log_sf2,
                     double log_sn2, bool standardize) {
  if (X.rows() < 1 || X.rows() != y.size())
    throw std::invalid_argument("gp: need >= 1 training point, consistent sizes");
  GpModel gp;
  gp.X = X;
  gp.y_mean = standardize ? y.mean() : 0.0;
  double sd = 1.0;
  if (standardize && y.size() > 1) {
    const double var = (y.array() - gp.y_mean).square().sum() / (y.size() - 1);
    sd = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  gp.y_std = sd;
  gp.y = (y.array() - gp.y_mean) / gp.y_std;
  gp.log_ls = log_ls;
  gp.log_sf2 = log_sf2;
  gp.log_sn2 = log_sn2;
  gp.log_marginal =
      log_marginal_for(gp.X, gp.y, gp.log_ls, gp.log_sf2, gp.log_sn2, &gp.chol_l, &gp.alpha);
  if (!std::isfinite(gp.log_marginal))
    throw SurrogateFitError("gp: kernel matrix not positive definite");
  return gp;
}

GpModel gp_fit(const Mat& X, const Vec& y, RandomStream& stream) {
  if (X.rows() < 1 || X.rows() != y.size())
    throw std::invalid_argument("gp_fit: need >= 1 training point");
  const int d = static_cast<int>(X.cols());

  // Standardize targets once; the search operates on standardized y.
  const double mean = y.mean();
  double sd = 1.0;
  if (y.size() > 1) {
    const double var = (y.array() - mean).square().sum() / (y.size() - 1);
    sd = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  const Vec ys = (y.array() - mean) / sd;

  const double ls_lo = std::log(0.03), ls_hi = std::log(10.0);
  const double sf_lo = std::log(1e-4), sf_hi = std::log(1e2);
  const double sn_lo = std::log(kNoiseFloor), sn_hi = std::log(1.0);

  const int n_params = d + 2;
  auto eval = [&](const Vec& p) {
    return log_marginal_for(X, ys, p.head(d), p[d], p[d + 1]);
  };

  Vec best_p;
  double best_val = -std::numeric_limits<double>::infinity();
  const int n_starts = 5;
  for (int s = 0; s < n_starts; ++s) {
    Vec p(n_params);
    if (s == 0) {
      p.head(d).setConstant(std::log(0.3));
      p[d] = 0.0;
      p[d + 1] = std::log(1e-4);
    } else {
      for (int i = 0; i < d; ++i) p[i] = stream.uniform(std::log(0.05), std::log(3.0));
      p[d] = stream.uniform(std::log(0.1), std::log(10.0));
      p[d + 1] = stream.uniform(sn_lo, std::log(1e-2));
    }
    double cur = eval(p);
    Vec steps = Vec::Constant(n_params, 0.6);
    int budget = 100;
    while (budget > 0) {
      bool improved = false;
      for (int i = 0; i < n_params && budget > 0; ++i) {
        const double lo = i < d ? ls_lo : (i == d ? sf_lo : sn_lo);
        const double hi = i < d ? ls_hi : (i == d ? sf_hi : sn_hi);
        Vec q = p;
        double best_move = cur;
        double best_coord = p[i];
        for (double dir : {+1.0, -1.0}) {
          q[i] = std::clamp(p[i] + dir * steps[i], lo, hi);
          if (q[i] == p[i]) continue;
          const double val = eval(q);
          if (val > best_move) {
            best_move = val;
            best_coord = q[i];
          }
        }
        --budget;
        if (best_move > cur) {
          cur = best_move;
          p[i] = best_coord;
          improved = true;
        } else {
          steps[i] *= 0.5;
        }
      }
      if (!improved && steps.maxCoeff() < 1e-3) break;
    }
    if (cur > best_val) {
      best_val = cur;
      best_p = p;
    }
  }
  if (!std::isfinite(best_val))
    throw SurrogateFitError("gp_fit: no positive-definite hyperparameters found");

  GpModel gp;
  gp.X = X;
  gp.y = ys;
  gp.y_mean = mean;
  gp.y_std = sd;
  gp.log_ls = best_p.head(d);
  gp.log_sf2 = best_p[d];
  gp.log_sn2 = std::max(best_p[d + 1], std::log(kNoiseFloor));
  gp.log_marginal =
      log_marginal_for(gp.X, gp.y, gp.log_ls, gp.log_sf2, gp.log_sn2, &gp.chol_l, &gp.alpha);
  if (!std::isfinite(gp.log_marginal))
    throw SurrogateFitError("gp_fit: final factorization failed");
  return gp;
}

std::pair<double, double> gp_predict(const GpModel& gp, const Vec& x) {
  const int n = gp.size();
  Vec ks(n);
  for (int i = 0; i < n; ++i)
    ks[i] = matern52(x, gp.X.row(i).transpose(), gp.log_ls, gp.log_sf2);
  const double mu_std = ks.dot(gp.alpha);
  const Vec w = gp.chol_l.triangularView<Eigen::Lower>().solve(ks);
  const double var_std =
      std::max(0.0, std::exp(gp.log_sf2) - w.squaredNorm()) + std::exp(gp.log_sn2);
  return {gp.y_mean + gp.y_std * mu_std, gp.y_std * gp.y_std * var_std};
}

void gp_predict_batch(const GpModel& gp, const Mat& Xq, Vec& mu, Vec& var) {
  const int n = gp.size();
  const int m = static_cast<int>(Xq.rows());
  Mat Ks(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i)
      Ks(i, j) = matern52(Xq.row(j).transpose(), gp.X.row(i).transpose(), gp.log_ls,
                          gp.log_sf2);
  mu = gp.y_mean + gp.y_std * (Ks.transpose() * gp.alpha).array();
  const Mat W = gp.chol_l.triangularView<Eigen::Lower>().solve(Ks);
  var.resize(m);
  const double sf2 = std::exp(gp.log_sf2);
  const double sn2 = std::exp(gp.log_sn2);
  for (int j = 0; j < m; ++j)
    var[j] = gp.y_std * gp.y_std *
             (std::max(0.0, sf2 - W.col(j).squaredNorm()) + sn2);
}

double gp_log_marginal(const GpModel& gp) { return gp.log_marginal; }

}  // namespace stiffopt
