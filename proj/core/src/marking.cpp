#include "nailfem/marking.hpp"

#include <algorithm>
#include <numeric>

namespace nailfem {

MarkedSet doerfler_mark(const LocalEstimators& est, const MarkParams& params) {
  const int n = static_cast<int>(est.eta_sq.size());
  if (n == 0) throw Error("doerfler_mark: empty estimator");
  if (!(params.theta > 0.0 && params.theta <= 1.0)) {
    throw Error("doerfler_mark: theta must lie in (0, 1]");
  }
  if (params.cmark < 1.0) throw Error("doerfler_mark: cmark must be >= 1");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (est.eta_sq[a] != est.eta_sq[b]) return est.eta_sq[a] > est.eta_sq[b];
    return a < b;
  });

  // total accumulated in the same (descending) order as the greedy sweep,
  // so the theta = 1 sweep terminates exactly at the support
  double total_sq = 0.0;
  for (int idx : order) total_sq += est.eta_sq[idx];
  if (total_sq <= 0.0) return MarkedSet({}, n);
  const double target = params.theta * total_sq;

  std::vector<int> marked;
  double acc = 0.0;
  for (int idx : order) {
    if (est.eta_sq[idx] <= 0.0) break;  // zero indicators are never needed
    marked.push_back(idx);
    acc += est.eta_sq[idx];
    if (acc >= target) break;
  }
  return MarkedSet(std::move(marked), n);
}

}  // namespace nailfem
