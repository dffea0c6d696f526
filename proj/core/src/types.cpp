#include "stiffopt/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stiffopt {

void Trajectory::reconstruct_velocities() {
  const int T = length();
  xdot = Mat::Zero(T, n_axes);
  for (int t = 1; t < T; ++t) xdot.row(t) = (x.row(t) - x.row(t - 1)) / dt;
  has_velocities = true;
}

void Trajectory::validate() const {
  if (dt <= 0.0) throw std::invalid_argument("Trajectory: dt must be > 0");
  if (n_axes < 1) throw std::invalid_argument("Trajectory: n_axes must be >= 1");
  const int T = length();
  if (T < 3) throw std::invalid_argument("Trajectory: need T >= 3 samples");
  if (x.cols() != n_axes || F.rows() != T || F.cols() != n_axes)
    throw std::invalid_argument("Trajectory: x/F shape mismatch");
  if (has_velocities && (xdot.rows() != T || xdot.cols() != n_axes))
    throw std::invalid_argument("Trajectory: xdot shape mismatch");
  if (!x.allFinite() || !F.allFinite())
    throw std::invalid_argument("Trajectory: non-finite entries");
}

void Segmentation::validate() const {
  const int T = length();
  if (M < 1) throw std::invalid_argument("Segmentation: M must be >= 1");
  if (T < 1) throw std::invalid_argument("Segmentation: empty label sequence");
  if (labels.front() != 1)
    throw std::invalid_argument("Segmentation: s_1 must be 1");
  if (labels.back() != M)
    throw std::invalid_argument("Segmentation: s_T must be M");
  std::vector<bool> seen(static_cast<std::size_t>(M), false);
  for (int t = 0; t < T; ++t) {
    if (labels[t] < 1 || labels[t] > M)
      throw std::invalid_argument("Segmentation: label out of 1..M");
    if (t > 0 && labels[t] < labels[t - 1])
      throw std::invalid_argument("Segmentation: labels must be non-decreasing");
    seen[static_cast<std::size_t>(labels[t] - 1)] = true;
  }
  for (int j = 0; j < M; ++j)
    if (!seen[static_cast<std::size_t>(j)])
      throw std::invalid_argument("Segmentation: label " + std::to_string(j + 1) +
                                  " never occurs");
}

Segmentation Segmentation::uniform(int T, int M) {
  Segmentation seg;
  seg.M = M;
  seg.labels.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    int j = 1 + (t * M) / T;
    seg.labels[static_cast<std::size_t>(t)] = std::min(j, M);
  }
  seg.labels.front() = 1;
  seg.labels.back() = M;
  return seg;
}

std::vector<std::pair<int, int>> Segmentation::segment_ranges() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(M));
  int begin = 0;
  for (int t = 1; t <= length(); ++t) {
    if (t == length() || labels[static_cast<std::size_t>(t)] != labels[static_cast<std::size_t>(begin)]) {
      out.emplace_back(begin, t);
      begin = t;
    }
  }
  return out;
}

std::vector<int> Segmentation::boundaries() const {
  std::vector<int> out;
  for (int t = 1; t < length(); ++t)
    if (labels[static_cast<std::size_t>(t)] != labels[static_cast<std::size_t>(t - 1)])
      out.push_back(t);
  return out;
}

void StiffnessParams::validate() const {
  if (bounds.k_min <= 0.0)
    throw std::invalid_argument("StiffnessParams: K_min must be > 0");
  if (bounds.k_max < bounds.k_min)
    throw std::invalid_argument("StiffnessParams: K_max < K_min");
  for (int j = 0; j < K.rows(); ++j)
    for (int a = 0; a < K.cols(); ++a) {
      const double k = K(j, a);
      if (!std::isfinite(k) || k < bounds.k_min || k > bounds.k_max)
        throw std::invalid_argument("StiffnessParams: entry outside [K_min, K_max]");
    }
}

Vec StiffnessParams::flatten() const {
  Vec theta(K.size());
  int i = 0;
  for (int j = 0; j < K.rows(); ++j)
    for (int a = 0; a < K.cols(); ++a) theta[i++] = K(j, a);
  return theta;
}

StiffnessParams StiffnessParams::from_flat(const Vec& theta, int M, int n_axes,
                                           StiffnessBounds bounds) {
  StiffnessParams p;
  p.bounds = bounds;
  p.K = Mat(M, n_axes);
  int i = 0;
  for (int j = 0; j < M; ++j)
    for (int a = 0; a < n_axes; ++a) p.K(j, a) = theta[i++];
  return p;
}

void ParetoArchive::add(Vec theta, ObjectivePoint y) {
  records.push_back({std::move(theta), y});
}

ObjectivePoint ParetoArchive::clamp_to_reference(const ObjectivePoint& y) const {
  return {std::max(y.y_task, reference.y_task), std::max(y.y_comp, reference.y_comp)};
}

ObjectivePoint ParetoArchive::normalize(const ObjectivePoint& y) const {
  const ObjectivePoint c = clamp_to_reference(y);
  const double dt_ = ideal.y_task - reference.y_task;
  const double dc = ideal.y_comp - reference.y_comp;
  return {dt_ > 0.0 ? (c.y_task - reference.y_task) / dt_ : 0.0,
          dc > 0.0 ? (c.y_comp - reference.y_comp) / dc : 0.0};
}

std::vector<ObjectivePoint> ParetoArchive::front() const {
  std::vector<ObjectivePoint> pts;
  pts.reserve(records.size());
  for (const auto& r : records) pts.push_back(clamp_to_reference(r.y));
  return pareto_front(pts);
}

std::vector<ObjectivePoint> ParetoArchive::normalized_front() const {
  std::vector<ObjectivePoint> pts;
  pts.reserve(records.size());
  for (const auto& r : records) pts.push_back(normalize(r.y));
  return pareto_front(pts);
}

std::vector<ParetoArchive::Record> ParetoArchive::front_records() const {
  std::vector<Record> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    bool dominated = false;
    const ObjectivePoint yi = clamp_to_reference(records[i].y);
    for (std::size_t k = 0; k < records.size() && !dominated; ++k) {
      if (k == i) continue;
      const ObjectivePoint yk = clamp_to_reference(records[k].y);
      if (dominates(yk, yi)) dominated = true;
      // Duplicates keep the earliest-evaluated record.
      if (k < i && yk.y_task == yi.y_task && yk.y_comp == yi.y_comp) dominated = true;
    }
    if (!dominated) out.push_back(records[i]);
  }
  std::stable_sort(out.begin(), out.end(), [](const Record& a, const Record& b) {
    return a.y.y_comp < b.y.y_comp;
  });
  return out;
}

}  // namespace stiffopt
