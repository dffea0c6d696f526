#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stiffopt/bo.hpp"
#include "stiffopt/segment.hpp"
#include "stiffopt/sim.hpp"
#include "stiffopt/types.hpp"

namespace stiffopt {

enum class SegMethod { icsld, gmm, sld };
std::string to_string(SegMethod method);
SegMethod seg_method_from_string(const std::string& name);

struct ExperimentConfig {
  TaskEnv env;
  int M = 2;
  double kappa = 1e-5;
  double beta = 1.0;
  int N = 100;
  int n_init = 8;
  SegMethod method = SegMethod::icsld;
  bool use_prior = true;
  StiffnessBounds bounds{10.0, 1000.0};
  ImpedanceConfig sim;
  ObjectivePoint reference;  // worst corner
  ObjectivePoint ideal;      // best corner
  int pool_budget = 1024;
  int ehvi_samples = 512;
  double track_error_bound = 1.0;  // reference task value for track is -bound

  // Task defaults: wipe2d -> M=2, door1d -> M=3.
  static ExperimentConfig defaults(TaskKind task);
  // Reference/ideal anchors require the demo length.
  void finalize_anchors(int T);
  void validate() const;
};

struct IterationRow {
  int n = 0;  // 1-based evaluation index
  Vec theta;  // stiffness N/m, phase-major
  double y_task = 0.0;
  double y_comp = 0.0;
  double hv = 0.0;  // normalized hypervolume so far
  double ms = 0.0;  // wall-clock per iteration
  bool flagged = false;  // diverged evaluation or surrogate fallback
};

struct RunRecord {
  std::vector<IterationRow> rows;
  ParetoArchive archive;
  Segmentation segmentation;
  Mat k_prior;  // M x n_axes
  double final_hv = 0.0;
};

// J_C = -sum_t trace(K_{s_t}): stiffness-magnitude penalty per time step.
double eval_compliance(const StiffnessParams& theta, const Segmentation& seg);

struct TaskEvalResult {
  double y_task = 0.0;
  bool diverged = false;
};

// Computes attractors from the demo, rolls out in the environment
// (disturbance active) and returns the reward sum.  Divergence maps to
// the reference value, flagged.
TaskEvalResult eval_task(const StiffnessParams& theta, const Segmentation& seg,
                         const Trajectory& demo, const TaskEnv& env,
                         const ImpedanceConfig& cfg, const ObjectivePoint& reference,
                         RandomStream& stream);

RunRecord run_optimization(const ExperimentConfig& config, const Trajectory& demo,
                           std::uint64_t seed);

struct BenchmarkCell {
  SegMethod method = SegMethod::icsld;
  bool use_prior = true;
  std::vector<std::uint64_t> seeds;
  std::vector<double> final_hv;       // per seed (NaN on failure)
  std::vector<std::string> failures;  // per-seed error text, empty on success
  Mat curves;                          // seeds x N normalized hv
  std::vector<ParetoArchive::Record> union_front;
  double mean_hv = 0.0;
  double std_hv = 0.0;
  double median_hv = 0.0;
};

struct BenchmarkSummary {
  TaskKind task = TaskKind::wipe2d;
  int N = 0;
  std::vector<BenchmarkCell> cells;  // 6 cells: {icsld,gmm,sld} x {prior,off}
};

// The {icsld, gmm, sld} x {prior on, off} grid over all seeds.
BenchmarkSummary run_benchmark(const ExperimentConfig& base, const Trajectory& demo,
                               const std::vector<std::uint64_t>& seeds);

struct SensitivityRow {
  int M = 0;
  double beta = 0.0;
  double mean_hv = 0.0;
  double std_hv = 0.0;
  double median_hv = 0.0;
};

// M x beta sweep with the icsld method (prior active when beta > 0).
std::vector<SensitivityRow> run_sensitivity(const ExperimentConfig& base,
                                            const Trajectory& demo,
                                            const std::vector<int>& m_values,
                                            const std::vector<double>& beta_values,
                                            const std::vector<std::uint64_t>& seeds);

double median(std::vector<double> v);

}  // namespace stiffopt
