#include "nailfem/newton.hpp"

#include <cmath>

namespace nailfem {

double dual_norm(const Factorization& energy_fac, const DualVec& b) {
  if (b.size() == 0) return 0.0;
  const Eigen::VectorXd r = energy_fac.solve(b);
  return std::sqrt(std::max(0.0, b.dot(r)));
}

NewtonState initial_newton_state(const SemilinearProblem& prob,
                                 const FESpace& space,
                                 const Factorization& energy_fac,
                                 const CoefVec& u0, double delta_min_in) {
  if (delta_min_in <= 0.0 || delta_min_in > 0.5) {
    throw Error("newton: delta_min must lie in (0, 1/2]");
  }
  NewtonState s;
  s.iterate = u0;
  s.residual = residual_vector(prob, space, u0);
  s.residual_norm = dual_norm(energy_fac, s.residual);
  s.delta_min = delta_min_in;
  s.k = 0;
  s.last_delta = 1.0;
  s.trial_count = 0;
  return s;
}

NewtonState newton_step(const SemilinearProblem& prob, const FESpace& space,
                        const Factorization& energy_fac,
                        const NewtonState& state) {
  const SparseMat J = jacobian_matrix(prob, space, state.iterate);
  const Factorization Jfac = factor(J);
  const CoefVec rho = Jfac.solve(state.residual);

  NewtonState next;
  next.delta_min = state.delta_min;
  next.k = state.k + 1;

  double delta = 1.0;
  int trials = 0;
  for (;;) {
    const CoefVec candidate = state.iterate + delta * rho;
    DualVec res = residual_vector(prob, space, candidate);
    const double norm = dual_norm(energy_fac, res);
    const double threshold =
        (1.0 - 0.5 * std::pow(next.delta_min, 1.5)) * state.residual_norm;
    if (norm <= threshold) {
      next.iterate = std::move(candidate);
      next.residual = std::move(res);
      next.residual_norm = norm;
      next.last_delta = delta;
      next.trial_count = trials;
      return next;
    }
    delta /= 2.0;
    ++trials;
    next.delta_min = std::min(delta, next.delta_min);
    if (delta < std::ldexp(1.0, -30)) {
      throw Error(
          "newton: damping underflow (delta < 2^-30); assumptions violated "
          "or assembly inconsistent");
    }
  }
}

std::vector<NewtonRecord> run_newton(
    const SemilinearProblem& prob, const FESpace& space,
    const Factorization& energy_fac, const CoefVec& u0,
    const StopPredicate& stop, double delta_min_in,
    const std::function<double(const CoefVec&)>& estimator_fn, int max_steps) {
  std::vector<NewtonRecord> history;
  history.push_back({initial_newton_state(prob, space, energy_fac, u0,
                                          delta_min_in),
                     std::nullopt});
  if (estimator_fn) {
    history.back().estimator = estimator_fn(history.back().state.iterate);
  }

  for (;;) {
    if (history.back().state.k >= max_steps) {
      throw Error("newton: iteration cap of " + std::to_string(max_steps) +
                  " steps exceeded without meeting the stopping criterion");
    }
    NewtonRecord rec{newton_step(prob, space, energy_fac,
                                 history.back().state),
                     std::nullopt};
    // Lazily computed, memoized estimator of the accepted iterate.
    auto estimator_total = [&]() -> double {
      if (!rec.estimator) {
        if (!estimator_fn) {
          throw Error("newton: stopping predicate requested an estimator "
                      "but none was supplied");
        }
        rec.estimator = estimator_fn(rec.state.iterate);
      }
      return *rec.estimator;
    };
    const bool done =
        stop(rec.state.k, rec.state.residual_norm, estimator_total);
    history.push_back(std::move(rec));
    if (done) return history;
  }
}

}  // namespace nailfem
