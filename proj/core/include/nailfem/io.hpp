#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "nailfem/driver.hpp"

namespace nailfem {

/// history.csv columns, in order:
///   ell,k,total_step,n_triangles,n_free_dofs,residual_norm,estimator,
///   quasi_error,delta_used,delta_min,cumulative_cost,energy
/// Doubles are printed with 17 significant digits (exact round-trip);
/// delta_used is blank on k = 0 rows, energy is blank for nonsymmetric
/// problems.
std::string history_csv(const RunHistory& h);

/// Summary quantities of one run.
struct RunSummary {
  std::optional<double> rate_slope_estimator;   // exit estimator vs cost
  std::optional<double> rate_slope_quasi_error; // quasi-error vs cost
  double final_delta_min = 0.5;
  double max_reduction_factor = 0.0;
  int levels = 0;
  long total_newton_steps = 0;
  bool jacobian_symmetric = true;
  std::string termination_reason;
};
RunSummary make_summary(const RunHistory& h, bool jacobian_symmetric);

/// summary.json contents (includes the run parameters for context).
std::string summary_json(const RunSummary& s, const RunConfig& config);

/// Writes history.csv, summary.json, and meshes/level_<ell>.txt under
/// `dir` (created if missing).
void write_run_outputs(const std::string& dir, const RunHistory& h,
                       const RunConfig& config);

}  // namespace nailfem
