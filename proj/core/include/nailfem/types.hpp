#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <string>

namespace nailfem {

/// Error type thrown by all modules. Messages name the offending input
/// (file, config key, dof, ...) where one exists.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Coefficient vector of a finite element function: one scalar per free dof.
using CoefVec = Eigen::VectorXd;

/// Residual functional tested against each free-dof basis function.
using DualVec = Eigen::VectorXd;

/// Square sparse matrix over the free dofs, compressed row layout.
/// `symmetric` marks matrices assembled from a symmetric bilinear form;
/// the SPD factorization path requires it.
struct SparseMat {
  Eigen::SparseMatrix<double, Eigen::RowMajor> m;
  bool symmetric = false;

  Eigen::Index rows() const { return m.rows(); }
  Eigen::Index cols() const { return m.cols(); }
};

}  // namespace nailfem
