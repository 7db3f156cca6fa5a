#pragma once

#include "nailfem/estimator.hpp"
#include "nailfem/mesh.hpp"

namespace nailfem {

struct MarkParams {
  double theta = 0.3;  // bulk parameter in (0, 1]
  double cmark = 1.0;  // informational; the greedy strategy attains 1
};

/// Doerfler marking: smallest set M with
///   theta * sum(eta_sq) <= sum_{t in M} eta_sq[t],
/// chosen greedily on descending indicators, ties broken by lower element
/// index. Zero indicators are never marked; a zero total yields the empty
/// set.
MarkedSet doerfler_mark(const LocalEstimators& est, const MarkParams& params);

}  // namespace nailfem
