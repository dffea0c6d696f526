#include "stiffopt/types.hpp"

#include <algorithm>

namespace stiffopt {

bool dominates(const ObjectivePoint& a, const ObjectivePoint& b) {
  const bool geq = a.y_task >= b.y_task && a.y_comp >= b.y_comp;
  const bool strict = a.y_task > b.y_task || a.y_comp > b.y_comp;
  return geq && strict;
}

std::vector<ObjectivePoint> pareto_front(const std::vector<ObjectivePoint>& points) {
  std::vector<ObjectivePoint> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool keep = true;
    for (std::size_t k = 0; k < points.size() && keep; ++k) {
      if (k == i) continue;
      if (dominates(points[k], points[i])) keep = false;
      // Equal points collapse to the earliest one.
      if (k < i && points[k].y_task == points[i].y_task &&
          points[k].y_comp == points[i].y_comp)
        keep = false;
    }
    if (keep) out.push_back(points[i]);
  }
  std::sort(out.begin(), out.end(), [](const ObjectivePoint& a, const ObjectivePoint& b) {
    return a.y_comp < b.y_comp;
  });
  return out;
}

}  // namespace stiffopt
