#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nailfem/driver.hpp"

namespace nailfem {

/// Result of one executable property check. `passed` holds iff every
/// observed value lies within its bound (pairwise observed[i] <= bound[i]
/// unless stated otherwise by the check). All bounds are engineering
/// tolerances; `context` records the configuration and seed so the report
/// is reproducible bit for bit.
struct PropertyReport {
  std::string name;
  bool passed = false;
  std::vector<double> observed;
  std::vector<double> bound;
  std::string context;
};

std::string reports_to_json(const std::vector<PropertyReport>& reports);

/// Newton iteration run to machine stagnation: the discrete ground truth
/// u_H* used by the oracles. Stops when the residual norm falls below
/// 1e-14 of its initial value, stops decreasing, or the damping loop hits
/// its floor at a negligible residual.
CoefVec newton_to_stagnation(const SemilinearProblem& prob,
                             const FESpace& space,
                             const Factorization& energy_fac,
                             const CoefVec& u0);

/// Two-sided band of ||F - A v|| / |||u* - v||| for random v near the
/// stagnation solution u*; requires a small space (<= 500 free dofs).
PropertyReport check_linearization_equivalence(const SemilinearProblem& prob,
                                               const FESpace& space,
                                               int trials,
                                               std::uint64_t seed = 20240901);

/// Stability (perturbation bound of the estimator) and reduction (under
/// uniform refinement with the function held fixed), packaged with
/// pass/fail bounds. The reduction half asserts the <= 1 form exactly for
/// linear problems and with a quadrature allowance otherwise.
PropertyReport check_axiom_A1_A2(const SemilinearProblem& prob, int p,
                                 std::uint64_t seed = 20240902);

/// Runs the driver and bundles its invariants, reduction-factor bounds,
/// and the estimator rate fit against [slope_lo, slope_hi].
std::vector<PropertyReport> check_full_run(const RunConfig& config,
                                           double slope_lo, double slope_hi);

/// Oracle-backed suites (runnable without any benchmark run):
/// marking minimality against the 2^n brute force,
PropertyReport check_doerfler_minimality(int trials,
                                         std::uint64_t seed = 101);
/// conformity and min-angle stability over random NVB marking sequences,
PropertyReport check_nvb_random_marking(int sequences,
                                        std::uint64_t seed = 102);
/// Jacobian against finite differences of the residual (3 decreasing eps),
PropertyReport check_jacobian_fd(std::uint64_t seed = 103);
/// discrete dual norm against a dense solve,
PropertyReport check_dual_norm_oracle(std::uint64_t seed = 104);
/// energy directional derivative against the residual,
PropertyReport check_energy_derivative(std::uint64_t seed = 105);
/// one undamped Newton step solving a linear problem.
PropertyReport check_linear_newton(std::uint64_t seed = 106);

/// The complete property suite (runs in minutes at desk scale).
std::vector<PropertyReport> verify_all();

}  // namespace nailfem
