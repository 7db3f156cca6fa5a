#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nailfem/estimator.hpp"
#include "nailfem/marking.hpp"
#include "nailfem/newton.hpp"
#include "nailfem/rates.hpp"

namespace nailfem {

/// Configuration of one adaptive run.
struct RunConfig {
  SemilinearProblem problem;
  std::shared_ptr<const Triangulation> initial_mesh;
  int p = 2;
  double theta = 0.3;
  double lambda_lin = 0.1;
  int k_min = 1;
  bool uniform = false;  // mark every element (theta = 1 baseline)

  // termination bounds; at least one must be active
  double max_cost = 5e6;   // cumulative triangle count
  long max_triangles = -1;  // stop after solving a level with #T >= bound
  double tol = -1.0;        // stop once the exit estimator falls below

  int max_newton_steps_per_level = 200;
  std::string out_dir;  // used by the CLI, not by nailfem_run
};

/// One record per computed iterate, indexed by (level, Newton step). The
/// records enumerate the run in total-step order: when a level is followed
/// by another one, its final iterate reappears as the next level's step 0
/// (nested iteration) and only the re-measured fine-space record is kept.
struct StepRecord {
  int ell = 0;
  int k = 0;
  long total_step = 0;
  long n_triangles = 0;
  long n_free_dofs = 0;
  double residual_norm = 0.0;
  double estimator_total = 0.0;
  double quasi_error = 0.0;  // residual_norm + estimator_total
  double delta_used = std::numeric_limits<double>::quiet_NaN();  // NaN at k=0
  double delta_min = 0.5;
  double cumulative_cost = 0.0;
  std::optional<double> energy;  // only for symmetric problems
};

/// Level-exit measurements of the final iterate in its own (level) space;
/// these back the stopping criterion, marking, and reduction factors.
struct LevelExit {
  int ell = 0;
  int k_final = 0;  // number of Newton steps taken on the level
  long n_triangles = 0;
  long n_free_dofs = 0;
  double residual_norm = 0.0;
  double estimator_total = 0.0;
  double delta_used = 1.0;  // damping of the step that produced the exit
  std::optional<double> energy;
};

struct RunHistory {
  std::vector<StepRecord> records;
  std::vector<LevelExit> exits;
  /// Mesh of every level (the last entry is the final mesh).
  std::vector<std::shared_ptr<const Triangulation>> meshes;
  /// Final-iterate coefficients per level (reference-solve oracles).
  std::vector<CoefVec> final_iterates;
  int p = 0;
  std::string termination_reason;
};

/// Carries the partial history when a run aborts.
class RunError : public Error {
 public:
  RunError(const std::string& what, RunHistory partial)
      : Error(what), partial_history(std::move(partial)) {}
  RunHistory partial_history;
};

/// The full adaptive Newton-linearized FEM loop: per level run the damped
/// Newton iteration from the prolongated previous solution until
///   k >= k_min  and  residual <= lambda_lin * estimator,
/// then Doerfler-mark the exit estimator, refine, and continue; delta_min
/// persists across levels. Stops at the first active termination bound.
RunHistory nailfem_run(const RunConfig& config);

/// Reduction factors r(ell, k) = residual(ell,k) / residual(ell,k-1) of
/// consecutive same-level residual norms, k >= 1 (the level-exit value
/// supplies the final step of each level).
struct ReductionFactor {
  int ell;
  int k;
  double value;
};
std::vector<ReductionFactor> reduction_factors(const RunHistory& h);

/// (cumulative cost, quasi-error) pairs over the records in step order.
Series quasi_error_series(const RunHistory& h);

/// (cumulative cost at level exit, exit estimator) pairs per level.
Series estimator_series(const RunHistory& h);

/// Damping parameters of every accepted Newton step in total-step order
/// (records with k >= 1 plus each level's exit step).
std::vector<double> accepted_deltas(const RunHistory& h);

}  // namespace nailfem
