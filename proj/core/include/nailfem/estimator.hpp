#pragma once

#include "nailfem/problem.hpp"

namespace nailfem {

/// Per-triangle squared estimator contributions and the cached total.
struct LocalEstimators {
  Eigen::VectorXd eta_sq;  // one nonnegative entry per triangle
  double total = 0.0;      // sqrt(sum of eta_sq)
};

/// Residual-based a posteriori estimator: per element
///   eta(T)^2 = h_T^2 ||f + div(A grad v - fvec) - b . grad v - c(v)||^2_T
///            + h_T ||[[(A grad v - fvec) . n]]||^2_{interior edges of T},
/// with h_T the longest edge. Every interior edge contributes its full
/// squared jump norm to both adjacent triangles; each side of a jump is
/// evaluated with its own (piecewise-constant) A. Boundary edges
/// contribute nothing. Interior terms use quadrature of exactness 2p+2,
/// edge terms Gauss with exactness 2p.
LocalEstimators local_estimators(const SemilinearProblem& prob,
                                 const FESpace& space, const CoefVec& v);

/// sqrt of the squared-estimator sum over a subset of triangles.
double restricted_total(const LocalEstimators& est, const MarkedSet& subset);

}  // namespace nailfem
