#include "stiffopt/segment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stiffopt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vec lambda_or_ones(const Vec& lambda, int n_axes) {
  if (lambda.size() == 0) return Vec::Ones(n_axes);
  if (lambda.size() != n_axes)
    throw std::invalid_argument("lambda dimension mismatch");
  return lambda;
}

// Backward-difference velocity, v[t] = (x[t] - x[t-1]) / dt, v[0] = 0.
Mat backward_velocities(const Trajectory& traj) {
  const int T = traj.length();
  Mat v = Mat::Zero(T, traj.n_axes);
  for (int t = 1; t < T; ++t) v.row(t) = (traj.x.row(t) - traj.x.row(t - 1)) / traj.dt;
  return v;
}

// Exact argmax over monotone label sequences with s_0 = 1, s_{T-1} = M and
// every label used (transitions j -> j or j -> j+1), maximizing the summed
// per-step scores.  scores is T x M.
std::vector<int> monotone_dp(const Mat& scores, int M) {
  const int T = static_cast<int>(scores.rows());
  Mat dp = Mat::Constant(T, M, kNegInf);
  Eigen::MatrixXi from = Eigen::MatrixXi::Zero(T, M);
  dp(0, 0) = scores(0, 0);
  for (int t = 1; t < T; ++t) {
    for (int j = 0; j < M; ++j) {
      double best = dp(t - 1, j);
      int arg = j;
      if (j > 0 && dp(t - 1, j - 1) > best) {
        best = dp(t - 1, j - 1);
        arg = j - 1;
      }
      if (best == kNegInf) continue;
      dp(t, j) = best + scores(t, j);
      from(t, j) = arg;
    }
  }
  if (dp(T - 1, M - 1) == kNegInf)
    throw InfeasibleSegmentCountError("no feasible left-to-right labeling");
  std::vector<int> labels(static_cast<std::size_t>(T));
  int j = M - 1;
  for (int t = T - 1; t >= 0; --t) {
    labels[static_cast<std::size_t>(t)] = j + 1;
    j = from(t, j);
  }
  return labels;
}

void check_feasible(int T, int M) {
  if (M < 1) throw InfeasibleSegmentCountError("M must be >= 1");
  if (T - 2 < M)
    throw InfeasibleSegmentCountError("infeasible M: need T - 2 >= M");
}

struct ResidualTerms {
  // Per interior step and axis: r(k) = dv - (k dx - 2 sqrt(k) v + F) dt / lambda
  Vec dv, dx, v, F;
  double dt = 0.0;
  double lambda = 1.0;

  double residual(int i, double k) const {
    return dv[i] - (k * dx[i] - 2.0 * std::sqrt(k) * v[i] + F[i]) * dt / lambda;
  }
};

// g(k) for one segment and axis.
double mstep_objective(const ResidualTerms& terms, const std::vector<int>& idx,
                       double kappa, double k) {
  double ss = 0.0;
  for (int i : idx) {
    const double r = terms.residual(i, k);
    ss += r * r;
  }
  return -ss / k - kappa * static_cast<double>(idx.size()) * std::log(k);
}

struct ScalarOpt {
  double k = 0.0;
  double value = kNegInf;
  bool clamped = false;
};

ScalarOpt maximize_stiffness(const ResidualTerms& terms, const std::vector<int>& idx,
                             double kappa, StiffnessBounds bounds, double incumbent) {
  const double zlo = std::log(bounds.k_min);
  const double zhi = std::log(bounds.k_max);
  auto g = [&](double z) { return mstep_objective(terms, idx, kappa, std::exp(z)); };

  ScalarOpt best;
  auto consider = [&](double z) {
    z = std::clamp(z, zlo, zhi);
    const double val = g(z);
    if (val > best.value) {
      best.value = val;
      best.k = std::exp(z);
    }
  };
  consider(zlo);
  consider(zhi);
  consider(std::log(incumbent));

  std::vector<double> starts;
  for (double k0 = bounds.k_min; k0 <= bounds.k_max * (1.0 + 1e-12); k0 *= 10.0)
    starts.push_back(std::log(std::min(k0, bounds.k_max)));
  starts.push_back(std::log(incumbent));

  const double h = 1e-4;
  bool need_fallback = false;
  for (double z : starts) {
    double cur = g(z);
    bool diverged = false;
    for (int it = 0; it < 60; ++it) {
      const double gp = (g(z + h) - g(z - h)) / (2.0 * h);
      const double gpp = (g(z + h) - 2.0 * g(z) + g(z - h)) / (h * h);
      if (!std::isfinite(gp) || !std::isfinite(gpp) || gpp >= -1e-18) {
        diverged = true;
        break;
      }
      double znext = z - gp / gpp;
      if (!std::isfinite(znext) || znext < zlo - 1.0 || znext > zhi + 1.0) {
        diverged = true;
        break;
      }
      znext = std::clamp(znext, zlo, zhi);
      const double val = g(znext);
      if (val + 1e-15 < cur) {
        diverged = true;
        break;
      }
      const bool done = std::abs(znext - z) < 1e-12;
      z = znext;
      cur = val;
      if (done) break;
    }
    consider(z);
    if (diverged) need_fallback = true;
  }

  if (need_fallback) {
    // Golden-section over the full log-stiffness bracket.
    const double phi = 0.6180339887498949;
    double a = zlo, b = zhi;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double gc = g(c), gd = g(d);
    for (int it = 0; it < 80 && (b - a) > 1e-10; ++it) {
      if (gc > gd) {
        b = d;
        d = c;
        gd = gc;
        c = b - phi * (b - a);
        gc = g(c);
      } else {
        a = c;
        c = d;
        gc = gd;
        d = a + phi * (b - a);
        gd = g(d);
      }
    }
    consider(0.5 * (a + b));
  }

  const double rel = 1e-9 * (bounds.k_max - bounds.k_min);
  best.clamped = best.k <= bounds.k_min + rel || best.k >= bounds.k_max - rel;
  return best;
}

}  // namespace

Vec icsld_residual(const Trajectory& traj, int t, const Vec& k, const Vec& lambda,
                   double dt) {
  const int T = traj.length();
  if (t < 1 || t > T - 2) throw std::out_of_range("icsld_residual: need 1 <= t <= T-2");
  const Vec lam = lambda_or_ones(lambda, traj.n_axes);
  const Vec v_t = (traj.x.row(t) - traj.x.row(t - 1)).transpose() / dt;
  const Vec v_next = (traj.x.row(t + 1) - traj.x.row(t)).transpose() / dt;
  const Vec dx = (traj.x.row(t + 1) - traj.x.row(t)).transpose();
  const Vec f = traj.F.row(t).transpose();
  return v_next - v_t -
         ((k.array() * dx.array() - 2.0 * k.array().sqrt() * v_t.array() + f.array()) /
          lam.array() * dt)
             .matrix();
}

double segment_objective(const Trajectory& traj, const Segmentation& seg,
                         const StiffnessParams& theta, double kappa,
                         const Vec& lambda) {
  const int T = traj.length();
  const Vec lam = lambda_or_ones(lambda, traj.n_axes);
  double obj = 0.0;
  for (int t = 1; t <= T - 2; ++t) {
    const Vec k = theta.stiffness(seg.labels[static_cast<std::size_t>(t)]);
    const Vec r = icsld_residual(traj, t, k, lam, traj.dt);
    obj += -(r.array().square() / k.array()).sum() - kappa * k.array().log().sum();
  }
  return obj;
}

Segmentation icsld_estep(const Trajectory& traj, const StiffnessParams& theta,
                         double kappa, int M, const Vec& lambda) {
  const int T = traj.length();
  check_feasible(T, M);
  const Vec lam = lambda_or_ones(lambda, traj.n_axes);
  Mat scores = Mat::Zero(T, M);
  for (int t = 1; t <= T - 2; ++t)
    for (int j = 1; j <= M; ++j) {
      const Vec k = theta.stiffness(j);
      const Vec r = icsld_residual(traj, t, k, lam, traj.dt);
      scores(t, j - 1) =
          -(r.array().square() / k.array()).sum() - kappa * k.array().log().sum();
    }
  Segmentation seg;
  seg.M = M;
  seg.labels = monotone_dp(scores, M);
  return seg;
}

MStepResult icsld_mstep(const Trajectory& traj, const Segmentation& seg, double kappa,
                        StiffnessBounds bounds, const Vec& lambda,
                        const std::optional<StiffnessParams>& incumbent) {
  const int T = traj.length();
  const int n_axes = traj.n_axes;
  const Vec lam = lambda_or_ones(lambda, n_axes);
  const Mat v = backward_velocities(traj);

  MStepResult out;
  out.theta.bounds = bounds;
  out.theta.K = Mat::Constant(seg.M, n_axes, bounds.k_min);

  for (int j = 1; j <= seg.M; ++j) {
    std::vector<int> idx;
    for (int t = 1; t <= T - 2; ++t)
      if (seg.labels[static_cast<std::size_t>(t)] == j) idx.push_back(t);
    for (int axis = 0; axis < n_axes; ++axis) {
      const double inc =
          incumbent ? incumbent->K(j - 1, axis) : std::sqrt(bounds.k_min * bounds.k_max);
      if (idx.empty()) {
        out.theta.K(j - 1, axis) = inc;
        out.clamped = true;
        continue;
      }
      ResidualTerms terms;
      terms.dt = traj.dt;
      terms.lambda = lam[axis];
      terms.dv = Vec(T);
      terms.dx = Vec(T);
      terms.v = Vec(T);
      terms.F = Vec(T);
      for (int t : idx) {
        terms.dv[t] = v(t + 1, axis) - v(t, axis);
        terms.dx[t] = traj.x(t + 1, axis) - traj.x(t, axis);
        terms.v[t] = v(t, axis);
        terms.F[t] = traj.F(t, axis);
      }
      const ScalarOpt opt = maximize_stiffness(terms, idx, kappa, bounds, inc);
      out.theta.K(j - 1, axis) = opt.k;
      out.clamped = out.clamped || opt.clamped;
    }
  }
  return out;
}

namespace {

Segmentation jittered_uniform(int T, int M, RandomStream& stream) {
  std::vector<int> bounds_(static_cast<std::size_t>(M + 1));
  bounds_[0] = 0;
  bounds_[static_cast<std::size_t>(M)] = T;
  for (int j = 1; j < M; ++j) {
    const int base = (j * T) / M;
    const int jitter = static_cast<int>(std::lround(stream.normal(0.0, T / (4.0 * M))));
    bounds_[static_cast<std::size_t>(j)] = std::clamp(base + jitter, j, T - (M - j));
  }
  std::sort(bounds_.begin(), bounds_.end());
  for (int j = 1; j <= M; ++j)
    bounds_[static_cast<std::size_t>(j)] =
        std::max(bounds_[static_cast<std::size_t>(j)], bounds_[static_cast<std::size_t>(j - 1)] + 1);
  bounds_[static_cast<std::size_t>(M)] = T;
  Segmentation seg;
  seg.M = M;
  seg.labels.resize(static_cast<std::size_t>(T));
  for (int j = 1; j <= M; ++j)
    for (int t = bounds_[static_cast<std::size_t>(j - 1)]; t < bounds_[static_cast<std::size_t>(j)]; ++t)
      seg.labels[static_cast<std::size_t>(t)] = j;
  seg.labels.back() = M;
  return seg;
}

}  // namespace

ICSLDModel icsld_fit(const Trajectory& traj, const SegmentOptions& opts,
                     RandomStream& stream) {
  traj.validate();
  const int T = traj.length();
  check_feasible(T, opts.M);
  if (opts.kappa <= 0.0) throw std::invalid_argument("icsld_fit: kappa must be > 0");
  const Vec lam = lambda_or_ones(opts.lambda, traj.n_axes);

  ICSLDModel best;
  best.objective = kNegInf;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    Segmentation seg = r == 0 ? Segmentation::uniform(T, opts.M)
                              : jittered_uniform(T, opts.M, stream);
    std::optional<StiffnessParams> theta;
    bool clamped = false;
    double prev = kNegInf;
    double obj = kNegInf;
    for (int it = 0; it < opts.max_iters; ++it) {
      MStepResult m = icsld_mstep(traj, seg, opts.kappa, opts.bounds, lam, theta);
      theta = m.theta;
      clamped = m.clamped;
      seg = icsld_estep(traj, *theta, opts.kappa, opts.M, lam);
      obj = segment_objective(traj, seg, *theta, opts.kappa, lam);
      if (it > 0 && std::abs(obj - prev) < opts.tol) break;
      prev = obj;
    }
    if (obj > best.objective) {
      best.objective = obj;
      best.stiffness = *theta;
      best.segmentation = seg;
      best.clamped = clamped;
    }
  }
  best.kappa = opts.kappa;
  best.lambda = lam;
  return best;
}

MStepResult prior_from_segmentation(const Trajectory& traj, const Segmentation& seg,
                                    double kappa, StiffnessBounds bounds,
                                    const Vec& lambda) {
  seg.validate();
  return icsld_mstep(traj, seg, kappa, bounds, lambda_or_ones(lambda, traj.n_axes));
}

Mat gmm_features(const Trajectory& traj) {
  const int T = traj.length();
  const int n = traj.n_axes;
  Mat v = Mat::Zero(T, n), a = Mat::Zero(T, n);
  for (int t = 1; t < T - 1; ++t) {
    v.row(t) = (traj.x.row(t + 1) - traj.x.row(t - 1)) / (2.0 * traj.dt);
    a.row(t) = (traj.x.row(t + 1) - 2.0 * traj.x.row(t) + traj.x.row(t - 1)) /
               (traj.dt * traj.dt);
  }
  v.row(0) = (traj.x.row(1) - traj.x.row(0)) / traj.dt;
  v.row(T - 1) = (traj.x.row(T - 1) - traj.x.row(T - 2)) / traj.dt;
  a.row(0) = a.row(1);
  a.row(T - 1) = a.row(T - 2);
  Mat xi(T, 4 * n);
  xi << traj.x, v, a, traj.F;
  return xi;
}

namespace {

double log_gaussian(const Vec& x, const Vec& mu, const Eigen::LLT<Mat>& llt,
                    double log_det) {
  const Vec d = x - mu;
  const Vec w = llt.matrixL().solve(d);
  return -0.5 * (w.squaredNorm() + log_det +
                 static_cast<double>(x.size()) * 1.8378770664093454836);
}

}  // namespace

GMMResult gmm_fit(const Trajectory& traj, int M, int max_iters, double tol,
                  RandomStream& stream) {
  traj.validate();
  const int T = traj.length();
  check_feasible(T, M);
  const Mat xi = gmm_features(traj);
  const int dim = static_cast<int>(xi.cols());
  const double reg = 1e-6;

  // k-means++-style seeding.
  std::vector<int> centers;
  centers.push_back(static_cast<int>(stream.uniform_index(static_cast<std::size_t>(T))));
  Vec d2 = Vec::Constant(T, std::numeric_limits<double>::max());
  while (static_cast<int>(centers.size()) < M) {
    for (int t = 0; t < T; ++t)
      d2[t] = std::min(d2[t], (xi.row(t) - xi.row(centers.back())).squaredNorm());
    const double total = d2.sum();
    int pick = T - 1;
    if (total > 0.0) {
      double u = stream.uniform() * total;
      for (int t = 0; t < T; ++t) {
        u -= d2[t];
        if (u <= 0.0) {
          pick = t;
          break;
        }
      }
    } else {
      pick = static_cast<int>(stream.uniform_index(static_cast<std::size_t>(T)));
    }
    centers.push_back(pick);
  }

  GMMModel model;
  model.weights = Vec::Constant(M, 1.0 / M);
  model.means = Mat(M, dim);
  for (int j = 0; j < M; ++j) model.means.row(j) = xi.row(centers[static_cast<std::size_t>(j)]);

  // Hard k-means refinement of the seeds.  Initializing every component with
  // the full data covariance lets each one span all clusters, which makes the
  // responsibilities near-uniform and collapses the means onto the global
  // mean; tight per-cluster initial covariances avoid that fixed point.
  std::vector<int> assign(static_cast<std::size_t>(T), 0);
  for (int km = 0; km < 25; ++km) {
    bool changed = false;
    for (int t = 0; t < T; ++t) {
      int best = 0;
      double best_d = std::numeric_limits<double>::max();
      for (int j = 0; j < M; ++j) {
        const double d = (xi.row(t) - model.means.row(j)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (assign[static_cast<std::size_t>(t)] != best) {
        assign[static_cast<std::size_t>(t)] = best;
        changed = true;
      }
    }
    for (int j = 0; j < M; ++j) {
      Vec sum = Vec::Zero(dim);
      int count = 0;
      for (int t = 0; t < T; ++t)
        if (assign[static_cast<std::size_t>(t)] == j) {
          sum += xi.row(t).transpose();
          ++count;
        }
      if (count > 0) model.means.row(j) = (sum / count).transpose();
    }
    if (!changed && km > 0) break;
  }
  model.covariances.assign(static_cast<std::size_t>(M), Mat::Zero(dim, dim));
  for (int j = 0; j < M; ++j) {
    Mat c = Mat::Zero(dim, dim);
    int count = 0;
    for (int t = 0; t < T; ++t)
      if (assign[static_cast<std::size_t>(t)] == j) {
        const Vec d = xi.row(t).transpose() - model.means.row(j).transpose();
        c += d * d.transpose();
        ++count;
      }
    if (count > 1) c /= static_cast<double>(count);
    c.diagonal().array() += reg;
    // Guard against singleton clusters with a vanishing covariance.
    for (int i = 0; i < dim; ++i)
      c(i, i) = std::max(c(i, i), 1e-4);
    model.covariances[static_cast<std::size_t>(j)] = c;
    model.weights[j] = std::max(1.0, static_cast<double>(count)) / static_cast<double>(T);
  }
  model.weights /= model.weights.sum();

  Mat resp(T, M);
  double prev_ll = kNegInf;
  for (int it = 0; it < max_iters; ++it) {
    // E-step.
    std::vector<Eigen::LLT<Mat>> llts;
    std::vector<double> log_dets;
    for (int j = 0; j < M; ++j) {
      llts.emplace_back(model.covariances[static_cast<std::size_t>(j)]);
      double ld = 0.0;
      for (int i = 0; i < dim; ++i) ld += 2.0 * std::log(llts.back().matrixL()(i, i));
      log_dets.push_back(ld);
    }
    double ll = 0.0;
    for (int t = 0; t < T; ++t) {
      Vec logp(M);
      for (int j = 0; j < M; ++j)
        logp[j] = std::log(model.weights[j]) +
                  log_gaussian(xi.row(t).transpose(), model.means.row(j).transpose(),
                               llts[static_cast<std::size_t>(j)],
                               log_dets[static_cast<std::size_t>(j)]);
      const double mx = logp.maxCoeff();
      const double lse = mx + std::log((logp.array() - mx).exp().sum());
      ll += lse;
      resp.row(t) = (logp.array() - lse).exp();
    }
    model.log_likelihood = ll;
    if (it > 0 && std::abs(ll - prev_ll) < tol) break;
    prev_ll = ll;

    // M-step.
    for (int j = 0; j < M; ++j) {
      const double nj = resp.col(j).sum();
      model.weights[j] = nj / static_cast<double>(T);
      if (nj < 1e-12) continue;
      model.means.row(j) = (resp.col(j).transpose() * xi) / nj;
      Mat c = Mat::Zero(dim, dim);
      for (int t = 0; t < T; ++t) {
        const Vec d = xi.row(t).transpose() - model.means.row(j).transpose();
        c += resp(t, j) * d * d.transpose();
      }
      c /= nj;
      c.diagonal().array() += reg;
      model.covariances[static_cast<std::size_t>(j)] = c;
    }
  }
  for (int j = 0; j < M; ++j)
    if (model.weights[j] < 1e-8)
      throw std::runtime_error("gmm_fit: degenerate component " + std::to_string(j + 1));

  // Raw argmax labels, with components reordered by their mean time of
  // responsibility so the left-to-right relabeling is meaningful.
  std::vector<std::pair<double, int>> order;
  for (int j = 0; j < M; ++j) {
    double wt = 0.0, ws = 0.0;
    for (int t = 0; t < T; ++t) {
      wt += resp(t, j) * t;
      ws += resp(t, j);
    }
    order.emplace_back(ws > 0 ? wt / ws : 0.0, j);
  }
  std::sort(order.begin(), order.end());
  std::vector<int> rank(static_cast<std::size_t>(M));
  for (int pos = 0; pos < M; ++pos) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)].second)] = pos;

  std::vector<int> raw(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    int arg = 0;
    resp.row(t).maxCoeff(&arg);
    raw[static_cast<std::size_t>(t)] = rank[static_cast<std::size_t>(arg)] + 1;
  }

  // Monotonize: DP-optimal contiguous relabeling minimizing disagreement.
  Mat agree = Mat::Zero(T, M);
  for (int t = 0; t < T; ++t)
    for (int j = 1; j <= M; ++j)
      agree(t, j - 1) = raw[static_cast<std::size_t>(t)] == j ? 0.0 : -1.0;
  GMMResult out;
  out.model = model;
  out.segmentation.M = M;
  out.segmentation.labels = monotone_dp(agree, M);
  return out;
}

SLDResult sld_fit(const Trajectory& traj, int M, int max_iters, double tol,
                  RandomStream& stream) {
  traj.validate();
  const int T = traj.length();
  check_feasible(T, M);
  const int n_axes = traj.n_axes;
  // Recorded velocities when available: with backward differences the
  // target v[t+1] equals dx[t]/dt exactly, which makes the unconstrained
  // regression degenerate (any segmentation fits with zero residual).
  const Mat v = traj.has_velocities ? traj.xdot : backward_velocities(traj);
  const double var_floor = 1e-12;

  // Per interior t: target v[t+1], regressors (v[t], dx[t], F[t]).
  auto fit_segment = [&](const std::vector<int>& idx, int axis, double& av, double& bv,
                         double& bpv, double& var) {
    Mat X(static_cast<int>(idx.size()), 3);
    Vec y(static_cast<int>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int t = idx[i];
      X(static_cast<int>(i), 0) = v(t, axis);
      X(static_cast<int>(i), 1) = traj.x(t + 1, axis) - traj.x(t, axis);
      X(static_cast<int>(i), 2) = traj.F(t, axis);
      y[static_cast<int>(i)] = v(t + 1, axis);
    }
    // QR on X directly: the regressors are near-collinear (dx ~ v·dt), and
    // normal equations lose enough precision to break EM monotonicity when
    // the residual variance is tiny.
    const Vec coef = X.colPivHouseholderQr().solve(y);
    av = coef[0];
    bv = coef[1];
    bpv = coef[2];
    var = std::max(var_floor, (y - X * coef).squaredNorm() / static_cast<double>(idx.size()));
  };

  auto mstep = [&](const Segmentation& seg, SLDModel& model) {
    for (int j = 1; j <= M; ++j) {
      std::vector<int> idx;
      for (int t = 1; t <= T - 2; ++t)
        if (seg.labels[static_cast<std::size_t>(t)] == j) idx.push_back(t);
      for (int axis = 0; axis < n_axes; ++axis) {
        if (idx.empty()) {
          model.a(j - 1, axis) = 1.0;
          model.b(j - 1, axis) = 0.0;
          model.bp(j - 1, axis) = 0.0;
          model.noise_var(j - 1, axis) = 1.0;
          continue;
        }
        fit_segment(idx, axis, model.a(j - 1, axis), model.b(j - 1, axis),
                    model.bp(j - 1, axis), model.noise_var(j - 1, axis));
      }
    }
  };

  auto loglik = [&](int t, int j, const SLDModel& model) {
    double s = 0.0;
    for (int axis = 0; axis < n_axes; ++axis) {
      const double mu = model.a(j - 1, axis) * v(t, axis) +
                        model.b(j - 1, axis) * (traj.x(t + 1, axis) - traj.x(t, axis)) +
                        model.bp(j - 1, axis) * traj.F(t, axis);
      const double var = model.noise_var(j - 1, axis);
      const double r = v(t + 1, axis) - mu;
      s += -0.5 * (r * r / var + std::log(2.0 * 3.14159265358979323846 * var));
    }
    return s;
  };

  auto objective = [&](const Segmentation& seg, const SLDModel& model) {
    double obj = 0.0;
    for (int t = 1; t <= T - 2; ++t)
      obj += loglik(t, seg.labels[static_cast<std::size_t>(t)], model);
    return obj;
  };

  SLDResult best;
  best.model.objective = kNegInf;
  for (int r = 0; r < 5; ++r) {
    Segmentation seg =
        r == 0 ? Segmentation::uniform(T, M) : jittered_uniform(T, M, stream);
    SLDModel model;
    model.a = Mat::Zero(M, n_axes);
    model.b = Mat::Zero(M, n_axes);
    model.bp = Mat::Zero(M, n_axes);
    model.noise_var = Mat::Ones(M, n_axes);
    double prev = kNegInf, obj = kNegInf;
    for (int it = 0; it < max_iters; ++it) {
      mstep(seg, model);
      Mat scores = Mat::Zero(T, M);
      for (int t = 1; t <= T - 2; ++t)
        for (int j = 1; j <= M; ++j) scores(t, j - 1) = loglik(t, j, model);
      seg.M = M;
      seg.labels = monotone_dp(scores, M);
      obj = objective(seg, model);
      if (it > 0 && std::abs(obj - prev) < tol) break;
      prev = obj;
    }
    if (obj > best.model.objective) {
      best.model = model;
      best.model.objective = obj;
      best.model.segmentation = seg;
      best.segmentation = seg;
    }
  }
  return best;
}

}  // namespace stiffopt
