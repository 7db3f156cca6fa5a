#pragma once

#include <memory>

#include "nailfem/types.hpp"

namespace nailfem {

/// Reusable direct factorization of a SparseMat. Symmetric matrices take a
/// sparse LDL^T path, general matrices sparse LU; both with deterministic
/// fill-reducing orderings. solve() meets a 1e-12 relative residual
/// contract (iterative refinement applied when needed). Immutable after
/// construction; concurrent solves are safe.
class Factorization {
 public:
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

  Eigen::Index size() const;
  bool symmetric() const;

  friend Factorization factor(const SparseMat& M);

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// Factors M. Throws Error on numerically singular matrices (pivot below
/// 1e-14 of the largest), naming the dof where possible.
Factorization factor(const SparseMat& M);

}  // namespace nailfem
