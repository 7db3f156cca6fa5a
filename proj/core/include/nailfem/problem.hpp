#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nailfem/fespace.hpp"
#include "nailfem/types.hpp"

namespace nailfem {

/// Partial sum sum_{n=0}^{N} x^n / n!, evaluated by Horner recurrence.
double truncated_exp(int order, double x);

/// Scalar reaction term c and its derivative, with the metadata required
/// by the growth assumptions. For the truncated-exponential family
/// c(u) = exp_N(scale*u) the closed forms are
///   c'(u)     = scale * exp_{N-1}(scale*u),
///   int_0^u c = (exp_{N+1}(scale*u) - 1) / scale.
struct Reaction {
  std::function<double(double)> c;
  std::function<double(double)> dc;
  /// Exact antiderivative int_0^u c(s) ds; required by energy().
  std::function<double(double)> antiderivative;
  int trunc_order = 0;      // N in the growth condition
  double growth_bound = 0;  // R in the growth condition
};

/// c(u) = exp_N(scale*u).
Reaction truncated_exp_reaction(int order, double scale);
/// c identically zero (linear problems).
Reaction zero_reaction();

/// Elementwise-polynomial flux load (the divergence must be supplied in
/// closed form). `root` is the ancestor element in the initial mesh.
struct FluxLoad {
  std::function<Vec2(int root, const Vec2&)> value;
  std::function<double(int root, const Vec2&)> divergence;
  bool is_zero() const { return !value; }
};

/// Data of the semilinear problem
///   -div(A grad u) + b . grad u + c(u) = f - div fvec,  u = 0 on the
/// boundary. The diffusion A is symmetric and piecewise constant per
/// initial element (one entry = constant on the whole domain).
struct SemilinearProblem {
  std::vector<Mat2> diffusion{Mat2::Identity()};
  double alpha_min = 1.0;  // declared lower eigenvalue bound of A
  double alpha_max = 1.0;  // declared upper eigenvalue bound of A
  Vec2 convection = Vec2::Zero();
  Reaction reaction = zero_reaction();
  std::function<double(const Vec2&)> load;  // f
  FluxLoad flux;                            // fvec, empty = 0
  std::string tag = "custom";

  const Mat2& A(int root) const {
    return diffusion.size() == 1 ? diffusion[0] : diffusion[root];
  }
  bool symmetric() const { return convection.isZero(0.0); }
};

/// Checks the declared assumptions: A symmetric with eigenvalues inside
/// [alpha_min, alpha_max], c' >= 0 on sampled arguments, antiderivative
/// consistent with c. Throws Error naming the violated condition.
void validate_problem(const SemilinearProblem& prob);

/// Benchmark problems on the L-shape: f = 2, c = exp_11(40 u), A = I;
/// case 1 has b = 0, case 2 has b = (-50, 0).
SemilinearProblem make_case1();
SemilinearProblem make_case2();
/// Linear Laplace problem with constant load (tests and oracles).
SemilinearProblem make_laplace(double f_const);

/// Entry i = int f phi_i + fvec . grad phi_i - A grad v . grad phi_i
///            - (b . grad v) phi_i - c(v) phi_i dx
/// over the free dofs, accumulated in element order. Quadrature exactness
/// 2p+2.
DualVec residual_vector(const SemilinearProblem& prob, const FESpace& space,
                        const CoefVec& v);

/// Entry (i,j) = int A grad phi_j . grad phi_i + (b . grad phi_j) phi_i
///               + c'(v) phi_j phi_i dx. Symmetric iff b = 0.
SparseMat jacobian_matrix(const SemilinearProblem& prob, const FESpace& space,
                          const CoefVec& v);

/// SPD Gram matrix of the energy inner product <A grad ., grad .>.
SparseMat energy_matrix(const SemilinearProblem& prob, const FESpace& space);

/// Energy E(v) = 1/2 int |A^{1/2} grad v|^2 + int C(v) - int f v
///               - int fvec . grad v, where C is the exact antiderivative
/// of c. Only defined for b = 0.
double energy(const SemilinearProblem& prob, const FESpace& space,
              const CoefVec& v);

/// Energy norm sqrt(v^T M v) given the energy matrix M.
double energy_norm(const SparseMat& energy_mat, const CoefVec& v);

}  // namespace nailfem
