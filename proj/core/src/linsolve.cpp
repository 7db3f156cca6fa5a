#include "nailfem/linsolve.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cassert>
#include <cmath>

namespace nailfem {

struct Factorization::Impl {
  Eigen::SparseMatrix<double> matrix;  // column-major copy for refinement
  bool symmetric = false;
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt;
  std::unique_ptr<
      Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>>
      lu;

  Eigen::VectorXd solve_raw(const Eigen::VectorXd& b) const {
    if (symmetric) return ldlt->solve(b);
    return lu->solve(b);
  }
};

Factorization factor(const SparseMat& M) {
  if (M.rows() != M.cols()) throw Error("factor: matrix not square");
  auto impl = std::make_shared<Factorization::Impl>();
  impl->matrix = M.m;  // row-major -> column-major
  impl->matrix.makeCompressed();
  impl->symmetric = M.symmetric;

  if (M.symmetric) {
    impl->ldlt = std::make_unique<
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
    impl->ldlt->compute(impl->matrix);
    if (impl->ldlt->info() != Eigen::Success) {
      throw Error("factor: matrix numerically singular or not SPD (LDLT "
                  "failed)");
    }
    const Eigen::VectorXd& D = impl->ldlt->vectorD();
    const double dmax = D.size() == 0 ? 0.0 : D.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < D.size(); ++i) {
      if (!(std::abs(D[i]) > 1e-14 * dmax) || D[i] <= 0.0) {
        // map the internal pivot position back to the original dof
        const auto& perm = impl->ldlt->permutationP().indices();
        Eigen::Index dof = i;
        for (Eigen::Index j = 0; j < perm.size(); ++j) {
          if (perm[j] == i) {
            dof = j;
            break;
          }
        }
        throw Error("factor: matrix numerically singular at dof " +
                    std::to_string(dof));
      }
    }
  } else {
    impl->lu = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>,
                                                Eigen::COLAMDOrdering<int>>>();
    impl->lu->analyzePattern(impl->matrix);
    impl->lu->factorize(impl->matrix);
    if (impl->lu->info() != Eigen::Success) {
      throw Error("factor: matrix numerically singular (LU: " +
                  impl->lu->lastErrorMessage() + ")");
    }
  }

  Factorization f;
  f.impl_ = std::move(impl);
  return f;
}

Eigen::VectorXd Factorization::solve(const Eigen::VectorXd& b) const {
  assert(impl_);
  if (b.size() != impl_->matrix.rows()) {
    throw Error("solve: right-hand side has wrong length");
  }
  const double bnorm = b.norm();
  if (bnorm == 0.0) return Eigen::VectorXd::Zero(b.size());

  Eigen::VectorXd x = impl_->solve_raw(b);
  // iterative refinement until the 1e-12 relative residual contract holds
  for (int pass = 0; pass < 3; ++pass) {
    const Eigen::VectorXd r = b - impl_->matrix * x;
    if (r.norm() <= 1e-12 * bnorm) break;
    x += impl_->solve_raw(r);
  }
  return x;
}

Eigen::Index Factorization::size() const { return impl_->matrix.rows(); }
bool Factorization::symmetric() const { return impl_->symmetric; }

}  // namespace nailfem
