#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "nailfem/linsolve.hpp"
#include "nailfem/problem.hpp"

namespace nailfem {

/// State of the damped Newton iteration on a fixed space.
struct NewtonState {
  CoefVec iterate;
  DualVec residual;           // F - A(iterate) tested against free dofs
  double residual_norm = 0.0;  // discrete dual norm of the residual
  double delta_min = 0.5;      // overall minimum damping, in (0, 1/2]
  int k = 0;
  double last_delta = 1.0;  // damping used to produce this iterate
  int trial_count = 0;      // halvings in the last step
};

/// Discrete dual norm sqrt(b^T r) with M r = b, where energy_fac factors
/// the energy Gram matrix of the same space.
double dual_norm(const Factorization& energy_fac, const DualVec& b);

/// Initial state at u0: assembles the residual and its dual norm.
NewtonState initial_newton_state(const SemilinearProblem& prob,
                                 const FESpace& space,
                                 const Factorization& energy_fac,
                                 const CoefVec& u0, double delta_min_in);

/// One adaptively damped Newton step:
///   (a) solve dA[u] rho = F - A(u) on the free dofs,
///   (b) start from delta = 1 and halve (updating delta_min after each
///       halving) until
///         ||F - A(u + delta rho)|| <= (1 - delta_min^{3/2}/2) ||F - A(u)||,
///   (c) accept u + delta rho.
/// Each damping trial costs one residual assembly and one Riesz solve
/// against the shared energy factorization. Throws Error if delta falls
/// below 2^-30.
NewtonState newton_step(const SemilinearProblem& prob, const FESpace& space,
                        const Factorization& energy_fac,
                        const NewtonState& state);

/// Accepted iterate plus the estimator value if the stopping predicate
/// requested it.
struct NewtonRecord {
  NewtonState state;
  std::optional<double> estimator;
};

/// Stopping predicate over (k, residual norm, lazily computed estimator
/// total) of the newly accepted iterate.
using StopPredicate =
    std::function<bool(int k, double residual_norm,
                       const std::function<double()>& estimator_total)>;

/// Runs newton_step from u0 until the predicate holds; returns the full
/// per-k history (including the initial state at k = 0). `estimator_fn`,
/// when given, is evaluated once per accepted iterate (never for rejected
/// damping trials) and recorded. Throws Error after `max_steps` steps.
std::vector<NewtonRecord> run_newton(
    const SemilinearProblem& prob, const FESpace& space,
    const Factorization& energy_fac, const CoefVec& u0,
    const StopPredicate& stop, double delta_min_in,
    const std::function<double(const CoefVec&)>& estimator_fn = nullptr,
    int max_steps = 200);

}  // namespace nailfem
