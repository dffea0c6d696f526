#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>
#include <vector>

namespace stiffopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Time-stamped demonstration data.  Rows are time steps, columns are
// translational axes; units are meters, meters/second, newtons, seconds.
struct Trajectory {
  double dt = 0.0;
  int n_axes = 0;
  Mat x;     // T x n_axes positions
  Mat F;     // T x n_axes external forces on the end-effector
  Mat xdot;  // T x n_axes velocities (reconstructed when not recorded)
  bool has_velocities = false;

  int length() const { return static_cast<int>(x.rows()); }

  // Backward-difference reconstruction with xdot_0 = 0.
  void reconstruct_velocities();
  // Throws std::invalid_argument on violated invariants (T >= 3, dt > 0,
  // consistent shapes).
  void validate() const;
};

// Left-to-right phase labels: s_0 = 1, s_{T-1} = M, non-decreasing, and
// every label in 1..M present.
struct Segmentation {
  std::vector<int> labels;  // values in 1..M
  int M = 0;

  int length() const { return static_cast<int>(labels.size()); }
  void validate() const;
  static Segmentation uniform(int T, int M);
  // Half-open [begin, end) index range per label 1..M.
  std::vector<std::pair<int, int>> segment_ranges() const;
  // First index of each label j >= 2 (the M-1 phase boundaries).
  std::vector<int> boundaries() const;
};

struct StiffnessBounds {
  double k_min = 10.0;
  double k_max = 1000.0;
};

// Per-phase diagonal stiffness, the optimization variable.  Damping is
// never stored; it is always derived as 2*sqrt(K) elementwise.
struct StiffnessParams {
  Mat K;  // M x n_axes diagonal entries, N/m
  StiffnessBounds bounds;

  int phases() const { return static_cast<int>(K.rows()); }
  int n_axes() const { return static_cast<int>(K.cols()); }
  Vec stiffness(int phase) const { return K.row(phase - 1).transpose(); }
  static Vec damping(const Vec& k) { return 2.0 * k.array().sqrt(); }
  void validate() const;
  // Flatten phase-major: (phase 1 axes..., phase 2 axes..., ...).
  Vec flatten() const;
  static StiffnessParams from_flat(const Vec& theta, int M, int n_axes,
                                   StiffnessBounds bounds);
};

// One evaluated (task, compliance) pair, both maximized.
struct ObjectivePoint {
  double y_task = 0.0;
  double y_comp = 0.0;
};

// Strict Pareto dominance under maximization.
bool dominates(const ObjectivePoint& a, const ObjectivePoint& b);

// Maximal non-dominated subset; duplicates collapse to the earliest
// representative; output sorted ascending by y_comp.
std::vector<ObjectivePoint> pareto_front(const std::vector<ObjectivePoint>& points);

// Evaluated candidates plus the fixed reference/ideal anchors used for
// normalization.  Points worse than the reference are clamped to it
// before any hypervolume computation.
struct ParetoArchive {
  struct Record {
    Vec theta;
    ObjectivePoint y;
  };
  std::vector<Record> records;
  ObjectivePoint reference;  // componentwise worst corner
  ObjectivePoint ideal;      // componentwise best corner

  void add(Vec theta, ObjectivePoint y);
  ObjectivePoint clamp_to_reference(const ObjectivePoint& y) const;
  // Maps [reference, ideal] onto [0,1]^2 (clamped below at the reference).
  ObjectivePoint normalize(const ObjectivePoint& y) const;
  std::vector<ObjectivePoint> front() const;
  std::vector<ObjectivePoint> normalized_front() const;
  std::vector<Record> front_records() const;
};

}  // namespace stiffopt
