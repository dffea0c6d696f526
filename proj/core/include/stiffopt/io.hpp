#pragma once

#include <string>

#include "stiffopt/pipeline.hpp"
#include "stiffopt/types.hpp"

namespace stiffopt {

// Shortest round-trip decimal rendering; the same bytes on every run.
std::string format_double(double value);

// JSON: {"dt", "n_axes", "x", "F", "xdot" (optional)}.
std::string trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const std::string& text);
void save_trajectory(const Trajectory& traj, const std::string& path);
Trajectory load_trajectory(const std::string& path);

// JSON: {"method", "M", "labels", "K_prior", "objective"}.
std::string segmentation_to_json(const Segmentation& seg, const Mat& k_prior,
                                 double objective, const std::string& method);
struct SegmentationFile {
  Segmentation segmentation;
  Mat k_prior;
  double objective = 0.0;
  std::string method;
};
SegmentationFile segmentation_from_json(const std::string& text);
void save_segmentation(const SegmentationFile& file, const std::string& path);
SegmentationFile load_segmentation(const std::string& path);

// CSV: n, theta_1..theta_d, y_task, y_comp, hv, ms.  The ms column is 0
// unless with_timings is set, so default output is byte-identical per seed.
std::string run_to_csv(const RunRecord& record, bool with_timings = false);

// CSV: y_task, y_comp, theta_1..theta_d for the non-dominated archive.
std::string pareto_to_csv(const ParetoArchive& archive);

// CSV: method, prior, seed, final_hv over all benchmark cells.
std::string benchmark_to_csv(const BenchmarkSummary& summary);
// CSV: method, prior, n, q25, median_hv, q75 learning curves.
std::string curves_to_csv(const BenchmarkSummary& summary);
// CSV: method, prior, mean_hv, std_hv, median_hv (one row per grid cell).
std::string benchmark_grid_to_csv(const BenchmarkSummary& summary);
// CSV: method, prior, y_T, y_C, theta_* union Pareto fronts across seeds.
std::string union_fronts_to_csv(const BenchmarkSummary& summary);
// CSV: M, beta, mean_hv, std_hv, median_hv.
std::string sensitivity_to_csv(const std::vector<SensitivityRow>& rows);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace stiffopt
