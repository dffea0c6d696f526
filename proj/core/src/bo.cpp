#include "stiffopt/bo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stiffopt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Non-dominated points sorted by descending y_task (ascending y_comp).
std::vector<ObjectivePoint> sorted_front(std::vector<ObjectivePoint> pts,
                                         const ObjectivePoint& r) {
  for (auto& p : pts) {
    p.y_task = std::max(p.y_task, r.y_task);
    p.y_comp = std::max(p.y_comp, r.y_comp);
  }
  // pareto_front sorts ascending y_comp, which on a maximization front is
  // already descending y_task.
  return pareto_front(pts);
}

// Staircase sweep over points sorted descending y_task.
double hv_sweep(const std::vector<ObjectivePoint>& desc, const ObjectivePoint& r) {
  double area = 0.0;
  double max_comp = r.y_comp;
  for (const auto& p : desc) {
    if (p.y_comp > max_comp) {
      area += (p.y_task - r.y_task) * (p.y_comp - max_comp);
      max_comp = p.y_comp;
    }
  }
  return area;
}

// Sweep with one extra point merged in; O(m), no allocation.
double hv_sweep_with(const std::vector<ObjectivePoint>& desc, const ObjectivePoint& r,
                     ObjectivePoint y) {
  y.y_task = std::max(y.y_task, r.y_task);
  y.y_comp = std::max(y.y_comp, r.y_comp);
  double area = 0.0;
  double max_comp = r.y_comp;
  bool y_pending = true;
  auto visit = [&](const ObjectivePoint& p) {
    if (p.y_comp > max_comp) {
      area += (p.y_task - r.y_task) * (p.y_comp - max_comp);
      max_comp = p.y_comp;
    }
  };
  for (const auto& p : desc) {
    if (y_pending && y.y_task >= p.y_task) {
      visit(y);
      y_pending = false;
    }
    visit(p);
  }
  if (y_pending) visit(y);
  return area;
}

}  // namespace

Vec SearchSpace::to_cube(const Vec& k) const {
  const double lo = std::log(bounds.k_min), hi = std::log(bounds.k_max);
  Vec u(k.size());
  for (int i = 0; i < k.size(); ++i)
    u[i] = std::clamp((std::log(k[i]) - lo) / (hi - lo), 0.0, 1.0);
  return u;
}

Vec SearchSpace::from_cube(const Vec& u) const {
  const double lo = std::log(bounds.k_min), hi = std::log(bounds.k_max);
  Vec k(u.size());
  for (int i = 0; i < u.size(); ++i)
    k[i] = std::exp(lo + std::clamp(u[i], 0.0, 1.0) * (hi - lo));
  return k;
}

StiffnessPrior StiffnessPrior::from_icsld(const Vec& k_pi, double beta,
                                          StiffnessBounds bounds) {
  StiffnessPrior prior;
  prior.mean_k = k_pi;
  prior.beta = beta;
  prior.bounds = bounds;
  prior.sigma_k = Vec(k_pi.size());
  // A wider floor than the nominal 1e-3 of the range: estimates sitting on
  // a stiffness bound would otherwise collapse the prior to a near-delta,
  // and the decaying weight then never lets the optimizer leave it.
  const double floor = 0.1 * (bounds.k_max - bounds.k_min);
  for (int i = 0; i < k_pi.size(); ++i) {
    const double s = std::min(bounds.k_max - k_pi[i], k_pi[i] - bounds.k_min);
    prior.sigma_k[i] = std::max(s, floor);
  }
  return prior;
}

double StiffnessPrior::log_density(const Vec& k) const {
  if (flat) return log_scale;
  double lp = log_scale;
  for (int i = 0; i < k.size(); ++i) {
    const double z = (k[i] - mean_k[i]) / sigma_k[i];
    lp += -0.5 * z * z - std::log(sigma_k[i]) - 0.91893853320467274178;
  }
  return lp;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// Acklam's rational approximation, refined by one Halley step.
double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double s = q * q;
    x = (((((a[0] * s + a[1]) * s + a[2]) * s + a[3]) * s + a[4]) * s + a[5]) * q /
        (((((b[0] * s + b[1]) * s + b[2]) * s + b[3]) * s + b[4]) * s + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * 2.5066282746310002 * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

Vec StiffnessPrior::sample_cube(const Vec& u, const SearchSpace& space) const {
  if (flat) return u;
  Vec k(u.size());
  for (int i = 0; i < u.size(); ++i) {
    const double lo_z = (bounds.k_min - mean_k[i]) / sigma_k[i];
    const double hi_z = (bounds.k_max - mean_k[i]) / sigma_k[i];
    const double plo = normal_cdf(lo_z), phi = normal_cdf(hi_z);
    const double p = plo + std::clamp(u[i], 1e-12, 1.0 - 1e-12) * (phi - plo);
    const double z = normal_quantile(std::clamp(p, 1e-15, 1.0 - 1e-15));
    k[i] = std::clamp(mean_k[i] + sigma_k[i] * z, bounds.k_min, bounds.k_max);
  }
  return space.to_cube(k);
}

Vec StiffnessPrior::mean_cube(const SearchSpace& space) const {
  if (flat) {
    Vec k(mean_k.size());
    for (int i = 0; i < k.size(); ++i)
      k[i] = std::clamp(mean_k[i], bounds.k_min, bounds.k_max);
    return space.to_cube(k);
  }
  Vec k(mean_k.size());
  for (int i = 0; i < k.size(); ++i)
    k[i] = std::clamp(mean_k[i], bounds.k_min, bounds.k_max);
  return space.to_cube(k);
}

double hypervolume(const std::vector<ObjectivePoint>& front, const ObjectivePoint& r) {
  if (front.empty()) return 0.0;
  return hv_sweep(sorted_front(front, r), r);
}

double ehvi_from_moments(double mu_task, double var_task, double mu_comp,
                         double var_comp, const std::vector<ObjectivePoint>& front,
                         const ObjectivePoint& r, const Mat& z) {
  const auto desc = sorted_front(front, r);
  const double base = hv_sweep(desc, r);
  const double sd_task = std::sqrt(std::max(0.0, var_task));
  const double sd_comp = std::sqrt(std::max(0.0, var_comp));
  double total = 0.0;
  for (int s = 0; s < z.rows(); ++s) {
    const ObjectivePoint y{mu_task + sd_task * z(s, 0), mu_comp + sd_comp * z(s, 1)};
    const double improvement = hv_sweep_with(desc, r, y) - base;
    if (improvement > 0.0) total += improvement;
  }
  return total / static_cast<double>(z.rows());
}

double ehvi_mc(const Vec& candidate, const Surrogate& model,
               const std::vector<ObjectivePoint>& front, const ObjectivePoint& r,
               int n_samples, RandomStream& stream) {
  if (n_samples < 1) throw std::invalid_argument("ehvi_mc: n_samples >= 1");
  const auto [mu_t, var_t] = gp_predict(model.task, candidate);
  const auto [mu_c, var_c] = gp_predict(model.comp, candidate);
  Mat z(n_samples, 2);
  for (int s = 0; s < n_samples; ++s) {
    z(s, 0) = stream.normal();
    z(s, 1) = stream.normal();
  }
  return ehvi_from_moments(mu_t, var_t, mu_c, var_c, front, r, z);
}

double pibo_weight(const Vec& k, const StiffnessPrior& prior, int n) {
  if (n < 1) throw std::invalid_argument("pibo_weight: n >= 1");
  if (prior.beta == 0.0) return 1.0;
  return std::exp(prior.beta / static_cast<double>(n) * prior.log_density(k));
}

SuggestResult suggest(const BoDataset& data, const std::vector<ObjectivePoint>& front,
                      const ObjectivePoint& r, const StiffnessPrior* prior, int n,
                      int budget, int ehvi_samples, const SearchSpace& space,
                      RandomStream& stream, SurrogateCache* cache, int refit_period) {
  if (data.X.rows() < 1) throw std::invalid_argument("suggest: empty dataset");
  const int d = space.dim;
  const bool prior_active = prior != nullptr && prior->beta > 0.0;

  Surrogate model;
  RandomStream fit_task = stream.fork("gp-task");
  RandomStream fit_comp = stream.fork("gp-comp");
  const bool full_search =
      cache == nullptr || !cache->valid || n - cache->fitted_n >= refit_period;
  try {
    Vec yt(data.X.rows()), yc(data.X.rows());
    for (int i = 0; i < data.X.rows(); ++i) {
      yt[i] = data.y[static_cast<std::size_t>(i)].y_task;
      yc[i] = data.y[static_cast<std::size_t>(i)].y_comp;
    }
    if (full_search) {
      model.task = gp_fit(data.X, yt, fit_task);
      model.comp = gp_fit(data.X, yc, fit_comp);
      if (cache != nullptr) {
        cache->valid = true;
        cache->fitted_n = n;
        cache->task = {model.task.log_ls, model.task.log_sf2, model.task.log_sn2};
        cache->comp = {model.comp.log_ls, model.comp.log_sf2, model.comp.log_sn2};
      }
    } else {
      model.task = gp_fit_fixed(data.X, yt, cache->task.log_ls, cache->task.log_sf2,
                                cache->task.log_sn2);
      model.comp = gp_fit_fixed(data.X, yc, cache->comp.log_ls, cache->comp.log_sf2,
                                cache->comp.log_sn2);
    }
  } catch (const SurrogateFitError&) {
    SuggestResult fb;
    fb.surrogate_fallback = true;
    fb.u = prior_active ? prior->mean_cube(space) : Vec::Constant(d, 0.5);
    return fb;
  }

  const auto desc = sorted_front(front, r);
  const double base_hv = hv_sweep(desc, r);

  // Common random numbers across every candidate scored in this call.
  Mat z(ehvi_samples, 2);
  RandomStream zs = stream.fork("ehvi-z");
  for (int s = 0; s < ehvi_samples; ++s) {
    z(s, 0) = zs.normal();
    z(s, 1) = zs.normal();
  }

  // Candidate pool: [0] prior mean (or cube center), then a prior-sampled
  // block, a uniform block, and a block of local perturbations of the
  // evaluated non-dominated points.  The prior-sampled fraction decays with
  // the same beta/n schedule as the acquisition weight, so late iterations
  // keep full uniform coverage; the local block refines the incumbent front.
  // Stream consumption is identical whether or not the prior is active.
  RandomStream pool_stream = stream.fork("pool");
  const double decay =
      prior_active ? std::max(0.1, std::min(1.0, prior->beta / static_cast<double>(n)))
                   : 0.0;
  const int n_prior = static_cast<int>(std::lround(0.5 * budget * decay));
  std::vector<int> front_rows;
  for (int i = 0; i < data.X.rows(); ++i) {
    bool dominated = false;
    for (int k = 0; k < data.X.rows() && !dominated; ++k)
      dominated = k != i && dominates(data.y[static_cast<std::size_t>(k)],
                                      data.y[static_cast<std::size_t>(i)]);
    if (!dominated) front_rows.push_back(i);
  }
  const int n_local = front_rows.empty() ? 0 : std::min(budget / 4, budget - 1 - n_prior);
  Mat pool(budget, d);
  pool.row(0) = (prior_active ? prior->mean_cube(space) : Vec::Constant(d, 0.5)).transpose();
  for (int i = 1; i < budget; ++i) {
    Vec u(d);
    for (int j = 0; j < d; ++j) u[j] = pool_stream.uniform();
    if (i <= n_prior && prior_active) u = prior->sample_cube(u, space);
    pool.row(i) = u.transpose();
  }
  RandomStream local_stream = stream.fork("pool-local");
  for (int i = budget - n_local; i < budget; ++i) {
    const int row = front_rows[local_stream.uniform_index(front_rows.size())];
    Vec u(d);
    for (int j = 0; j < d; ++j)
      u[j] = std::clamp(data.X(row, j) + 0.03 * local_stream.normal(), 0.0, 1.0);
    pool.row(i) = u.transpose();
  }

  auto log_alpha_of = [&](const Vec& u, double mu_t, double var_t, double mu_c,
                          double var_c) {
    double total = 0.0;
    const double sd_t = std::sqrt(std::max(0.0, var_t));
    const double sd_c = std::sqrt(std::max(0.0, var_c));
    for (int s = 0; s < z.rows(); ++s) {
      const ObjectivePoint y{mu_t + sd_t * z(s, 0), mu_c + sd_c * z(s, 1)};
      const double imp = hv_sweep_with(desc, r, y) - base_hv;
      if (imp > 0.0) total += imp;
    }
    const double ehvi = total / static_cast<double>(z.rows());
    double la = ehvi > 0.0 ? std::log(ehvi) : kNegInf;
    if (prior_active && std::isfinite(la))
      la += prior->beta / static_cast<double>(n) * prior->log_density(space.from_cube(u));
    return la;
  };

  Vec mu_t, var_t, mu_c, var_c;
  gp_predict_batch(model.task, pool, mu_t, var_t);
  gp_predict_batch(model.comp, pool, mu_c, var_c);

  std::vector<double> scores(static_cast<std::size_t>(budget));
  for (int i = 0; i < budget; ++i)
    scores[static_cast<std::size_t>(i)] =
        log_alpha_of(pool.row(i).transpose(), mu_t[i], var_t[i], mu_c[i], var_c[i]);

  int best_idx = 0;
  for (int i = 1; i < budget; ++i)
    if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best_idx)])
      best_idx = i;
  Vec best_u = pool.row(best_idx).transpose();
  double best_score = scores[static_cast<std::size_t>(best_idx)];

  // Coordinate-wise refinement of the 8 best pool points.
  std::vector<int> order(static_cast<std::size_t>(budget));
  for (int i = 0; i < budget; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  const int n_refine = std::min(8, budget);
  const double radii[7] = {0.08, 0.04, 0.02, 0.01, 0.005, 0.002, 0.001};
  auto score_point = [&](const Vec& u) {
    const auto [mt, vt] = gp_predict(model.task, u);
    const auto [mc, vc] = gp_predict(model.comp, u);
    return log_alpha_of(u, mt, vt, mc, vc);
  };
  for (int rk = 0; rk < n_refine; ++rk) {
    Vec u = pool.row(order[static_cast<std::size_t>(rk)]).transpose();
    double cur = scores[static_cast<std::size_t>(order[static_cast<std::size_t>(rk)])];
    for (double radius : radii) {
      for (int j = 0; j < d; ++j) {
        for (double dir : {+1.0, -1.0}) {
          Vec q = u;
          q[j] = std::clamp(u[j] + dir * radius, 0.0, 1.0);
          if (q[j] == u[j]) continue;
          const double val = score_point(q);
          if (val > cur) {
            cur = val;
            u = q;
          }
        }
      }
    }
    if (cur > best_score) {
      best_score = cur;
      best_u = u;
    }
  }

  SuggestResult out;
  out.u = best_u;
  return out;
}

}  // namespace stiffopt
