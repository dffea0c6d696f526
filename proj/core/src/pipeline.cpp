#include "stiffopt/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stiffopt {

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                           23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(int base, int index) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (index > 0) {
    r += f * (index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

Vec halton_point(int index, int dim) {
  if (dim > static_cast<int>(std::size(kPrimes)))
    throw std::invalid_argument("halton_point: dimension too large");
  Vec u(dim);
  for (int j = 0; j < dim; ++j) u[j] = radical_inverse(kPrimes[j], index);
  return u;
}

Mat make_sine_reference(int T, double dt) {
  Mat ref(T, 1);
  for (int t = 0; t < T; ++t) ref(t, 0) = 0.1 * std::sin(2.0 * M_PI * t * dt / 3.0);
  return ref;
}

}  // namespace

std::string to_string(SegMethod method) {
  switch (method) {
    case SegMethod::icsld: return "icsld";
    case SegMethod::gmm: return "gmm";
    case SegMethod::sld: return "sld";
  }
  throw std::invalid_argument("unknown segmentation method");
}

SegMethod seg_method_from_string(const std::string& name) {
  if (name == "icsld") return SegMethod::icsld;
  if (name == "gmm") return SegMethod::gmm;
  if (name == "sld") return SegMethod::sld;
  throw std::invalid_argument("unknown segmentation method: " + name);
}

ExperimentConfig ExperimentConfig::defaults(TaskKind task) {
  ExperimentConfig cfg;
  switch (task) {
    case TaskKind::wipe2d:
      cfg.env = TaskEnv::make_wipe2d();
      cfg.M = 2;
      break;
    case TaskKind::door1d:
      cfg.env = TaskEnv::make_door1d();
      cfg.M = 3;
      break;
    case TaskKind::track:
      cfg.env = TaskEnv::make_track(make_sine_reference(120, 0.05));
      cfg.M = 2;
      break;
  }
  cfg.sim = ImpedanceConfig::unit(cfg.env.n_axes, 0.05, 1e-3);
  return cfg;
}

void ExperimentConfig::finalize_anchors(int T) {
  reference.y_comp = -static_cast<double>(T) * env.n_axes * bounds.k_max;
  ideal.y_comp = -static_cast<double>(T) * env.n_axes * bounds.k_min;
  reference.y_task = (env.kind == TaskKind::track) ? -track_error_bound : 0.0;
  ideal.y_task = env.max_reward(T);
}

void ExperimentConfig::validate() const {
  if (M < 1) throw std::invalid_argument("config: M must be >= 1");
  if (kappa <= 0.0) throw std::invalid_argument("config: kappa must be > 0");
  if (beta < 0.0) throw std::invalid_argument("config: beta must be >= 0");
  if (N < 1) throw std::invalid_argument("config: N must be >= 1");
  if (n_init < 1 || n_init > N)
    throw std::invalid_argument("config: need 1 <= n_init <= N");
  if (!(bounds.k_min > 0.0) || !(bounds.k_max > bounds.k_min))
    throw std::invalid_argument("config: need 0 < k_min < k_max");
  if (!(ideal.y_task > reference.y_task) || !(ideal.y_comp > reference.y_comp))
    throw std::invalid_argument(
        "config: ideal must strictly dominate reference (call finalize_anchors)");
  if (pool_budget < 2 || ehvi_samples < 1)
    throw std::invalid_argument("config: pool/sample budgets too small");
}

double eval_compliance(const StiffnessParams& theta, const Segmentation& seg) {
  double total = 0.0;
  for (int label : seg.labels) total += theta.K.row(label - 1).sum();
  return -total;
}

TaskEvalResult eval_task(const StiffnessParams& theta, const Segmentation& seg,
                         const Trajectory& demo, const TaskEnv& env,
                         const ImpedanceConfig& cfg, const ObjectivePoint& reference,
                         RandomStream& stream) {
  try {
    AttractorTrajectory attractors = compute_attractors(demo, seg, theta, cfg);
    RolloutResult result = rollout(env, seg, theta, attractors, cfg, stream);
    return {result.reward_sum(), false};
  } catch (const IntegrationDivergedError&) {
    return {reference.y_task, true};
  }
}

RunRecord run_optimization(const ExperimentConfig& config, const Trajectory& demo,
                           std::uint64_t seed) {
  config.validate();
  demo.validate();
  const int T = demo.length();
  const int n_axes = demo.n_axes;
  const int dim = config.M * n_axes;

  RandomStream root(seed, "run");
  RandomStream seg_stream = root.fork("segment");

  RunRecord record;
  switch (config.method) {
    case SegMethod::icsld: {
      SegmentOptions opts;
      opts.M = config.M;
      opts.kappa = config.kappa;
      opts.bounds = config.bounds;
      opts.lambda = config.sim.lambda;
      ICSLDModel model = icsld_fit(demo, opts, seg_stream);
      record.segmentation = model.segmentation;
      record.k_prior = model.stiffness.K;
      break;
    }
    case SegMethod::gmm: {
      GMMResult result = gmm_fit(demo, config.M, 100, 1e-8, seg_stream);
      record.segmentation = result.segmentation;
      record.k_prior = prior_from_segmentation(demo, result.segmentation, config.kappa,
                                               config.bounds, config.sim.lambda)
                           .theta.K;
      break;
    }
    case SegMethod::sld: {
      SLDResult result = sld_fit(demo, config.M, 100, 1e-8, seg_stream);
      record.segmentation = result.segmentation;
      record.k_prior = prior_from_segmentation(demo, result.segmentation, config.kappa,
                                               config.bounds, config.sim.lambda)
                           .theta.K;
      break;
    }
  }

  SearchSpace space{dim, config.bounds};
  StiffnessPrior prior;
  const bool prior_active = config.use_prior && config.beta > 0.0;
  if (prior_active) {
    StiffnessParams prior_theta;
    prior_theta.K = record.k_prior;
    prior_theta.bounds = config.bounds;
    prior = StiffnessPrior::from_icsld(prior_theta.flatten(), config.beta,
                                       config.bounds);
  }

  record.archive.reference = config.reference;
  record.archive.ideal = config.ideal;

  BoDataset data;
  data.X.resize(0, dim);
  const ObjectivePoint r_norm{0.0, 0.0};
  SurrogateCache cache;

  for (int n = 1; n <= config.N; ++n) {
    auto tic = std::chrono::steady_clock::now();
    Vec u;
    bool flagged = false;
    if (n <= config.n_init) {
      if (n == 1 && prior_active) {
        u = prior.mean_cube(space);
      } else {
        u = halton_point(n, dim);
      }
    } else {
      RandomStream suggest_stream = root.fork("suggest-" + std::to_string(n));
      SuggestResult sr = suggest(data, record.archive.normalized_front(), r_norm,
                                 prior_active ? &prior : nullptr, n,
                                 config.pool_budget, config.ehvi_samples, space,
                                 suggest_stream, &cache);
      u = sr.u;
      flagged = sr.surrogate_fallback;
    }

    Vec k = space.from_cube(u);
    StiffnessParams theta =
        StiffnessParams::from_flat(k, config.M, n_axes, config.bounds);

    RandomStream eval_stream = root.fork("eval-" + std::to_string(n));
    TaskEvalResult task = eval_task(theta, record.segmentation, demo, config.env,
                                    config.sim, config.reference, eval_stream);
    ObjectivePoint y{task.y_task, eval_compliance(theta, record.segmentation)};
    flagged = flagged || task.diverged;

    record.archive.add(k, y);
    data.X.conservativeResize(data.X.rows() + 1, Eigen::NoChange);
    data.X.row(data.X.rows() - 1) = u.transpose();
    data.y.push_back(record.archive.normalize(y));

    IterationRow row;
    row.n = n;
    row.theta = k;
    row.y_task = y.y_task;
    row.y_comp = y.y_comp;
    row.hv = hypervolume(record.archive.normalized_front(), r_norm);
    row.flagged = flagged;
    auto toc = std::chrono::steady_clock::now();
    row.ms = std::chrono::duration<double, std::milli>(toc - tic).count();
    record.rows.push_back(std::move(row));
  }

  record.final_hv = record.rows.back().hv;
  (void)T;
  return record;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return (v.size() % 2 == 1) ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

namespace {

void finish_cell_stats(BenchmarkCell& cell) {
  std::vector<double> ok;
  for (double hv : cell.final_hv)
    if (std::isfinite(hv)) ok.push_back(hv);
  if (ok.empty()) {
    cell.mean_hv = cell.std_hv = cell.median_hv =
        std::numeric_limits<double>::quiet_NaN();
    return;
  }
  double mean = 0.0;
  for (double hv : ok) mean += hv;
  mean /= static_cast<double>(ok.size());
  double var = 0.0;
  for (double hv : ok) var += (hv - mean) * (hv - mean);
  var = ok.size() > 1 ? var / static_cast<double>(ok.size() - 1) : 0.0;
  cell.mean_hv = mean;
  cell.std_hv = std::sqrt(var);
  cell.median_hv = median(ok);
}

BenchmarkCell run_cell(const ExperimentConfig& cfg, const Trajectory& demo,
                       const std::vector<std::uint64_t>& seeds,
                       std::vector<ParetoArchive::Record>* union_records) {
  BenchmarkCell cell;
  cell.method = cfg.method;
  cell.use_prior = cfg.use_prior;
  cell.seeds = seeds;
  cell.curves = Mat::Constant(static_cast<int>(seeds.size()), cfg.N,
                              std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    try {
      RunRecord run = run_optimization(cfg, demo, seeds[i]);
      cell.final_hv.push_back(run.final_hv);
      cell.failures.emplace_back();
      for (int n = 0; n < cfg.N; ++n) cell.curves(static_cast<int>(i), n) = run.rows[n].hv;
      if (union_records) {
        auto fr = run.archive.front_records();
        union_records->insert(union_records->end(), fr.begin(), fr.end());
      }
    } catch (const std::exception& err) {
      cell.final_hv.push_back(std::numeric_limits<double>::quiet_NaN());
      cell.failures.emplace_back(err.what());
    }
  }
  finish_cell_stats(cell);
  return cell;
}

}  // namespace

BenchmarkSummary run_benchmark(const ExperimentConfig& base, const Trajectory& demo,
                               const std::vector<std::uint64_t>& seeds) {
  BenchmarkSummary summary;
  summary.task = base.env.kind;
  summary.N = base.N;
  for (SegMethod method : {SegMethod::icsld, SegMethod::gmm, SegMethod::sld}) {
    for (bool use_prior : {true, false}) {
      ExperimentConfig cfg = base;
      cfg.method = method;
      cfg.use_prior = use_prior;
      std::vector<ParetoArchive::Record> union_records;
      BenchmarkCell cell = run_cell(cfg, demo, seeds, &union_records);
      ParetoArchive merged;
      merged.reference = base.reference;
      merged.ideal = base.ideal;
      merged.records = std::move(union_records);
      cell.union_front = merged.front_records();
      summary.cells.push_back(std::move(cell));
    }
  }
  return summary;
}

std::vector<SensitivityRow> run_sensitivity(const ExperimentConfig& base,
                                            const Trajectory& demo,
                                            const std::vector<int>& m_values,
                                            const std::vector<double>& beta_values,
                                            const std::vector<std::uint64_t>& seeds) {
  std::vector<SensitivityRow> rows;
  for (int m : m_values) {
    for (double beta : beta_values) {
      ExperimentConfig cfg = base;
      cfg.method = SegMethod::icsld;
      cfg.M = m;
      cfg.beta = beta;
      cfg.use_prior = beta > 0.0;
      BenchmarkCell cell = run_cell(cfg, demo, seeds, nullptr);
      SensitivityRow row;
      row.M = m;
      row.beta = beta;
      row.mean_hv = cell.mean_hv;
      row.std_hv = cell.std_hv;
      row.median_hv = cell.median_hv;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace stiffopt
