#include "nailfem/driver.hpp"

#include <cmath>

namespace nailfem {

namespace {

void validate_config(const RunConfig& config) {
  if (!config.initial_mesh) throw Error("run: no initial mesh");
  if (config.k_min < 1) throw Error("run: k_min must be >= 1");
  if (!(config.lambda_lin > 0.0)) throw Error("run: lambda_lin must be > 0");
  if (!(config.theta > 0.0 && config.theta <= 1.0)) {
    throw Error("run: theta must lie in (0, 1]");
  }
  if (!(config.max_cost > 0.0) && config.max_triangles <= 0 &&
      !(config.tol > 0.0)) {
    throw Error("run: no termination bound set (max_cost, max_triangles, "
                "or tol)");
  }
  validate_problem(config.problem);
}

}  // namespace

RunHistory nailfem_run(const RunConfig& config) {
  validate_config(config);
  const SemilinearProblem& prob = config.problem;
  const bool with_energy = prob.symmetric();

  RunHistory history;
  history.p = config.p;

  std::shared_ptr<const Triangulation> mesh = config.initial_mesh;
  std::shared_ptr<const FESpace> prev_space;
  CoefVec prev_exit;
  double delta_min = 0.5;
  long total_step_offset = 0;
  double cumulative = 0.0;

  for (int ell = 0;; ++ell) {
    const auto space = build_space(mesh, config.p);
    const Factorization Mfac = factor(energy_matrix(prob, *space));

    CoefVec u0;
    LocalEstimators exit_locals;
    std::vector<NewtonRecord> newton_hist;
    try {
      u0 = (ell == 0) ? CoefVec::Zero(space->n_free_dofs())
                      : prolongate(*prev_space, *space, prev_exit);

      auto estimator_fn = [&](const CoefVec& w) {
        exit_locals = local_estimators(prob, *space, w);
        return exit_locals.total;
      };
      // Algorithm stopping rule; the estimator is evaluated for every
      // accepted iterate so the records are complete.
      auto predicate = [&](int k, double res,
                           const std::function<double()>& est) {
        const double eta = est();
        return k >= config.k_min && res <= config.lambda_lin * eta;
      };
      newton_hist =
          run_newton(prob, *space, Mfac, u0, predicate, delta_min,
                     estimator_fn, config.max_newton_steps_per_level);
    } catch (const Error& e) {
      history.termination_reason = "error";
      throw RunError("level " + std::to_string(ell) + ": " + e.what(),
                     std::move(history));
    }

    const int k_final = newton_hist.back().state.k;
    const long nt = mesh->n_triangles();
    const long nfree = space->n_free_dofs();
    delta_min = newton_hist.back().state.delta_min;

    // records of the index set: steps 0 .. k_final-1 now, the exit either
    // reappears as step 0 of the next level or closes the run below
    auto make_record = [&](const NewtonRecord& nr) {
      StepRecord r;
      r.ell = ell;
      r.k = nr.state.k;
      r.total_step = total_step_offset + nr.state.k;
      r.n_triangles = nt;
      r.n_free_dofs = nfree;
      r.residual_norm = nr.state.residual_norm;
      r.estimator_total = nr.estimator.value();
      r.quasi_error = r.residual_norm + r.estimator_total;
      if (nr.state.k > 0) r.delta_used = nr.state.last_delta;
      r.delta_min = nr.state.delta_min;
      cumulative += static_cast<double>(nt);
      r.cumulative_cost = cumulative;
      if (with_energy) r.energy = energy(prob, *space, nr.state.iterate);
      return r;
    };
    for (int k = 0; k < k_final; ++k) {
      history.records.push_back(make_record(newton_hist[k]));
    }

    const NewtonState& exit_state = newton_hist.back().state;
    LevelExit exit;
    exit.ell = ell;
    exit.k_final = k_final;
    exit.n_triangles = nt;
    exit.n_free_dofs = nfree;
    exit.residual_norm = exit_state.residual_norm;
    exit.estimator_total = newton_hist.back().estimator.value();
    exit.delta_used = exit_state.last_delta;
    if (with_energy) exit.energy = energy(prob, *space, exit_state.iterate);
    history.exits.push_back(exit);
    history.meshes.push_back(mesh);
    history.final_iterates.push_back(exit_state.iterate);

    std::string stop;
    if (config.tol > 0.0 && exit.estimator_total <= config.tol) {
      stop = "estimator tolerance reached";
    } else if (config.max_triangles > 0 && nt >= config.max_triangles) {
      stop = "max triangles reached";
    } else if (config.max_cost > 0.0 &&
               cumulative + static_cast<double>(nt) >= config.max_cost) {
      stop = "max cost reached";
    }
    if (!stop.empty()) {
      history.records.push_back(make_record(newton_hist.back()));
      history.termination_reason = stop;
      return history;
    }

    std::shared_ptr<const Triangulation> next;
    if (config.uniform) {
      next = uniform_refine(*mesh);
    } else {
      next = refine(*mesh, doerfler_mark(exit_locals, {config.theta, 1.0}));
    }
    prev_space = space;
    prev_exit = exit_state.iterate;
    total_step_offset += k_final;
    mesh = next;
  }
}

std::vector<ReductionFactor> reduction_factors(const RunHistory& h) {
  if (h.records.empty()) throw Error("reduction_factors: empty history");
  std::vector<ReductionFactor> out;
  for (const LevelExit& exit : h.exits) {
    // same-level residual sequence: records k = 0.. plus the level exit
    std::vector<double> res;
    for (const StepRecord& r : h.records) {
      if (r.ell == exit.ell) res.push_back(r.residual_norm);
    }
    if (static_cast<int>(res.size()) == exit.k_final) {
      res.push_back(exit.residual_norm);  // exit not among the records
    }
    for (std::size_t k = 1; k < res.size(); ++k) {
      const double denom = res[k - 1];
      out.push_back({exit.ell, static_cast<int>(k),
                     denom == 0.0 ? 0.0 : res[k] / denom});
    }
  }
  return out;
}

std::vector<double> accepted_deltas(const RunHistory& h) {
  std::vector<double> out;
  for (const LevelExit& exit : h.exits) {
    for (const StepRecord& r : h.records) {
      if (r.ell == exit.ell && r.k >= 1 && r.k < exit.k_final) {
        out.push_back(r.delta_used);
      }
    }
    out.push_back(exit.delta_used);
  }
  return out;
}

Series quasi_error_series(const RunHistory& h) {
  Series s;
  s.reserve(h.records.size());
  for (const StepRecord& r : h.records) {
    s.emplace_back(r.cumulative_cost, r.quasi_error);
  }
  return s;
}

Series estimator_series(const RunHistory& h) {
  Series s;
  long exit_step = 0;
  for (const LevelExit& exit : h.exits) {
    exit_step += exit.k_final;
    if (exit_step >= static_cast<long>(h.records.size())) break;
    // records are in total-step order with total_step == index; the entry
    // at the exit step is the next level's step 0 (or, on the final
    // level, the closing exit record itself)
    s.emplace_back(h.records[exit_step].cumulative_cost,
                   exit.estimator_total);
  }
  return s;
}

}  // namespace nailfem
