#include "nailfem/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include <json.hpp>

namespace nailfem {

namespace {

std::string digest(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return s + " #" + buf;
}

CoefVec random_coefs(int n, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> N(0.0, scale);
  CoefVec v(n);
  for (int i = 0; i < n; ++i) v[i] = N(rng);
  return v;
}

double min_angle(const Triangulation& mesh) {
  double amin = 4.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i) {
      const Vec2 p = mesh.vertex(tri.v[i]);
      const Vec2 a = (mesh.vertex(tri.v[(i + 1) % 3]) - p).normalized();
      const Vec2 b = (mesh.vertex(tri.v[(i + 2) % 3]) - p).normalized();
      amin = std::min(amin, std::acos(std::clamp(a.dot(b), -1.0, 1.0)));
    }
  }
  return amin;
}

}  // namespace

std::string reports_to_json(const std::vector<PropertyReport>& reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const PropertyReport& r : reports) {
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["passed"] = r.passed;
    j["observed"] = r.observed;
    j["bound"] = r.bound;
    j["context"] = r.context;
    j["engineering_tolerance"] = true;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

CoefVec newton_to_stagnation(const SemilinearProblem& prob,
                             const FESpace& space,
                             const Factorization& energy_fac,
                             const CoefVec& u0) {
  NewtonState state = initial_newton_state(prob, space, energy_fac, u0, 0.5);
  const double initial = state.residual_norm;
  if (initial == 0.0) return state.iterate;
  for (int k = 0; k < 200; ++k) {
    NewtonState next;
    try {
      next = newton_step(prob, space, energy_fac, state);
    } catch (const Error&) {
      // the damping loop cannot reduce a residual at the numerical floor
      if (state.residual_norm <= 1e-10 * initial) break;
      throw;
    }
    const bool converged = next.residual_norm <= 1e-14 * initial;
    const bool stagnated = state.residual_norm - next.residual_norm <=
                           1e-14 * state.residual_norm;
    state = std::move(next);
    if (converged || stagnated) break;
  }
  return state.iterate;
}

PropertyReport check_linearization_equivalence(const SemilinearProblem& prob,
                                               const FESpace& space,
                                               int trials,
                                               std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "linearization_equivalence/" + prob.tag;
  rep.context = digest(prob.tag + " p=" + std::to_string(space.order()) +
                       " dofs=" + std::to_string(space.n_free_dofs()) +
                       " trials=" + std::to_string(trials) +
                       " seed=" + std::to_string(seed));
  if (space.n_free_dofs() > 500) {
    throw Error("check_linearization_equivalence: space too large");
  }
  const SparseMat M = energy_matrix(prob, space);
  const Factorization Mfac = factor(M);
  const CoefVec ustar = newton_to_stagnation(
      prob, space, Mfac, CoefVec::Zero(space.n_free_dofs()));

  std::mt19937_64 rng(seed);
  double rmin = std::numeric_limits<double>::infinity();
  double rmax = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    CoefVec d = random_coefs(space.n_free_dofs(), rng, 1.0);
    const double dn = energy_norm(M, d);
    if (dn == 0.0) continue;
    const double mag = std::pow(10.0, -1.0 - 4.0 * (trial % 5) / 4.0);
    const CoefVec v = ustar + (mag / dn) * d;
    const double num = dual_norm(Mfac, residual_vector(prob, space, v));
    const double den = energy_norm(M, ustar - v);
    if (den == 0.0) continue;
    const double ratio = num / den;
    rmin = std::min(rmin, ratio);
    rmax = std::max(rmax, ratio);
  }
  rep.observed = {rmin, rmax, rmax / rmin};
  rep.bound = {0.0, std::numeric_limits<double>::infinity(), 1e3};
  rep.passed = rmin > 0.0 && std::isfinite(rmax) && rmax / rmin <= 1e3;
  return rep;
}

PropertyReport check_axiom_A1_A2(const SemilinearProblem& prob, int p,
                                 std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "axioms_A1_A2/" + prob.tag + "_p" + std::to_string(p);
  rep.context = digest(prob.tag + " p=" + std::to_string(p) +
                       " seed=" + std::to_string(seed));

  auto coarse_mesh = uniform_refine(*initial_mesh("l_shape"));
  auto coarse = build_space(coarse_mesh, p);
  const SparseMat M = energy_matrix(prob, *coarse);
  std::mt19937_64 rng(seed);

  // (A1) stability: the perturbation constant is stable across two batches
  auto batch = [&]() {
    double cmax = 0.0;
    for (int rep_i = 0; rep_i < 20; ++rep_i) {
      CoefVec v = random_coefs(coarse->n_free_dofs(), rng, 0.02);
      CoefVec d = random_coefs(coarse->n_free_dofs(), rng, 1.0);
      const CoefVec w = v + (1e-3 / energy_norm(M, d)) * d;
      const double ev = local_estimators(prob, *coarse, v).total;
      const double ew = local_estimators(prob, *coarse, w).total;
      cmax = std::max(cmax, std::abs(ev - ew) / energy_norm(M, v - w));
    }
    return cmax;
  };
  const double c1 = batch();
  const double c2 = batch();
  const double stability_ratio = std::max(c1 / c2, c2 / c1);

  // (A2) reduction: uniform refinement with the function held fixed
  const Factorization Mfac = factor(M);
  const CoefVec v = newton_to_stagnation(
      prob, *coarse, Mfac, CoefVec::Zero(coarse->n_free_dofs()));
  auto fine_mesh = uniform_refine(*coarse_mesh);
  auto fine = build_space(fine_mesh, p);
  const CoefVec vf = prolongate(*coarse, *fine, v);
  const double eta_c = local_estimators(prob, *coarse, v).total;
  const double eta_f = local_estimators(prob, *fine, vf).total;
  const bool nonlinear = prob.reaction.trunc_order > 0;
  const double a2_bound = nonlinear ? 1.0 + 1e-6 : 1.0 + 1e-10;
  const double a2_ratio = eta_f / eta_c;

  rep.observed = {stability_ratio, a2_ratio};
  rep.bound = {10.0, a2_bound};
  rep.passed = std::isfinite(c1) && c1 > 0.0 && stability_ratio <= 10.0 &&
               a2_ratio <= a2_bound;
  return rep;
}

std::vector<PropertyReport> check_full_run(const RunConfig& config,
                                           double slope_lo, double slope_hi) {
  const std::string tag =
      config.problem.tag + "_p" + std::to_string(config.p) +
      (config.uniform ? "_uniform" : "_adaptive");
  const std::string ctx = digest(
      tag + " theta=" + std::to_string(config.theta) +
      " lambda_lin=" + std::to_string(config.lambda_lin) +
      " k_min=" + std::to_string(config.k_min) +
      " max_triangles=" + std::to_string(config.max_triangles));

  const RunHistory h = nailfem_run(config);
  std::vector<PropertyReport> out;

  {
    PropertyReport r;
    r.name = "full_run/" + tag + "/stopping_criterion";
    r.context = ctx;
    double worst = 0.0;
    int min_k = std::numeric_limits<int>::max();
    for (const LevelExit& e : h.exits) {
      if (e.estimator_total > 0.0) {
        worst = std::max(worst, e.residual_norm /
                                    (config.lambda_lin * e.estimator_total));
      }
      min_k = std::min(min_k, e.k_final);
    }
    r.observed = {worst, static_cast<double>(min_k)};
    r.bound = {1.0 + 1e-12, static_cast<double>(config.k_min)};
    r.passed = worst <= 1.0 + 1e-12 && min_k >= config.k_min;
    out.push_back(r);
  }
  {
    PropertyReport r;
    r.name = "full_run/" + tag + "/delta_min_monotone";
    r.context = ctx;
    double max_increase = 0.0;
    for (std::size_t i = 1; i < h.records.size(); ++i) {
      max_increase = std::max(
          max_increase, h.records[i].delta_min - h.records[i - 1].delta_min);
    }
    r.observed = {max_increase};
    r.bound = {0.0};
    r.passed = max_increase <= 0.0;
    out.push_back(r);
  }
  {
    PropertyReport r;
    r.name = "full_run/" + tag + "/cost_and_quasi_error_consistency";
    r.context = ctx;
    double cost = 0.0, cost_err = 0.0, qe_err = 0.0;
    for (const StepRecord& rec : h.records) {
      cost += static_cast<double>(rec.n_triangles);
      cost_err = std::max(cost_err, std::abs(rec.cumulative_cost - cost));
      qe_err = std::max(
          qe_err, std::abs(rec.quasi_error -
                           (rec.residual_norm + rec.estimator_total)) /
                      rec.quasi_error);
    }
    r.observed = {cost_err, qe_err};
    r.bound = {0.0, 1e-12};
    r.passed = cost_err == 0.0 && qe_err <= 1e-12;
    out.push_back(r);
  }
  {
    PropertyReport r;
    r.name = "full_run/" + tag + "/reduction_factors";
    r.context = ctx;
    double rmax = 0.0;
    for (const ReductionFactor& rf : reduction_factors(h)) {
      rmax = std::max(rmax, rf.value);
    }
    r.observed = {rmax};
    r.bound = {1.0};
    r.passed = rmax < 1.0;
    out.push_back(r);
  }
  {
    PropertyReport r;
    r.name = "full_run/" + tag + "/estimator_rate";
    r.context = ctx;
    const RateFit fit = fit_rate_last_decade(estimator_series(h));
    r.observed = {fit.slope, fit.r_squared};
    r.bound = {slope_lo, slope_hi};
    r.passed = fit.slope >= slope_lo && fit.slope <= slope_hi;
    out.push_back(r);
  }
  {
    PropertyReport r;
    r.name = "full_run/" + tag + "/r_linear_quasi_error";
    r.context = ctx;
    double log_sum = 0.0;
    int n = 0;
    double max_ratio = 0.0;
    for (std::size_t i = 1; i < h.records.size(); ++i) {
      const double ratio =
          h.records[i].quasi_error / h.records[i - 1].quasi_error;
      log_sum += std::log(ratio);
      max_ratio = std::max(max_ratio, ratio);
      ++n;
    }
    const double geomean = std::exp(log_sum / std::max(1, n));
    r.observed = {geomean, max_ratio};
    r.bound = {1.0, std::numeric_limits<double>::infinity()};
    r.passed = geomean < 1.0 && std::isfinite(max_ratio);
    out.push_back(r);
  }
  return out;
}

PropertyReport check_doerfler_minimality(int trials, std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "doerfler_minimality_brute_force";
  rep.context = digest("trials=" + std::to_string(trials) +
                       " seed=" + std::to_string(seed));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_int_distribution<int> coin(0, 3);
  int mismatches = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const int n = len(rng);
    LocalEstimators est;
    est.eta_sq.resize(n);
    for (int i = 0; i < n; ++i) {
      est.eta_sq[i] = (coin(rng) == 0) ? 0.0 : U(rng);
    }
    est.total = std::sqrt(est.eta_sq.sum());
    const double theta = (trial % 10 == 0) ? 1.0 : 0.001 + 0.999 * U(rng);
    const auto marked = doerfler_mark(est, {theta, 1.0});

    // brute-force reference with the 1e-12 summation slack of the property
    const double total = est.eta_sq.sum();
    const double target = theta * total;
    int best = n + 1;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      double s = 0.0;
      int card = 0;
      for (int i = 0; i < n; ++i) {
        if (mask & (1u << i)) {
          s += est.eta_sq[i];
          ++card;
        }
      }
      if (s >= target - 1e-12 * total) best = std::min(best, card);
    }
    double marked_sum = 0.0;
    for (int i : marked.indices()) marked_sum += est.eta_sq[i];
    if (static_cast<int>(marked.size()) != best ||
        marked_sum < target - 1e-12 * total) {
      ++mismatches;
    }
  }
  rep.observed = {static_cast<double>(mismatches)};
  rep.bound = {0.0};
  rep.passed = mismatches == 0;
  return rep;
}

PropertyReport check_nvb_random_marking(int sequences,
                                        std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "nvb_conformity_min_angle";
  rep.context = digest("sequences=" + std::to_string(sequences) +
                       " seed=" + std::to_string(seed));
  std::mt19937_64 rng(seed);
  auto L0 = initial_mesh("l_shape");
  const double floor_angle =
      std::min({min_angle(*L0), min_angle(*uniform_refine(*L0)),
                min_angle(*uniform_refine(*uniform_refine(*L0)))});

  int violations = 0;
  double worst_angle = 4.0;
  for (int seq = 0; seq < sequences; ++seq) {
    auto mesh = L0;
    for (int depth = 0; depth < 6; ++depth) {
      const int nt = mesh->n_triangles();
      std::uniform_int_distribution<int> pick(0, nt - 1);
      std::uniform_int_distribution<int> count(1, 8);
      std::vector<int> marks;
      const int m = count(rng);
      for (int i = 0; i < m; ++i) marks.push_back(pick(rng));
      mesh = refine(*mesh, MarkedSet(marks, nt));
      try {
        mesh->validate();
      } catch (const Error&) {
        ++violations;
      }
      worst_angle = std::min(worst_angle, min_angle(*mesh));
    }
  }
  rep.observed = {static_cast<double>(violations), worst_angle};
  rep.bound = {0.0, floor_angle};
  rep.passed = violations == 0 && worst_angle >= floor_angle - 1e-12;
  return rep;
}

PropertyReport check_jacobian_fd(std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "jacobian_finite_difference";
  rep.context = digest("seed=" + std::to_string(seed));
  auto mesh = uniform_refine(*initial_mesh("l_shape"));
  auto space = build_space(mesh, 2);
  SemilinearProblem prob = make_case1();
  std::mt19937_64 rng(seed);
  const CoefVec v = random_coefs(space->n_free_dofs(), rng, 0.02);
  const CoefVec w = random_coefs(space->n_free_dofs(), rng, 1.0);
  const DualVec r0 = residual_vector(prob, *space, v);
  const DualVec Jw = jacobian_matrix(prob, *space, v).m * w;

  rep.passed = true;
  double prev = std::numeric_limits<double>::infinity();
  for (const double eps : {1e-4, 1e-5, 1e-6}) {
    const DualVec r1 = residual_vector(prob, *space, v + eps * w);
    const double err = ((r1 - r0) / eps + Jw).norm() / Jw.norm();
    rep.observed.push_back(err / eps);  // bounded constant = first order
    rep.bound.push_back(50.0);
    if (err / eps > 50.0 || err >= prev) rep.passed = false;
    prev = err;
  }
  return rep;
}

PropertyReport check_dual_norm_oracle(std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "dual_norm_dense_oracle";
  rep.context = digest("seed=" + std::to_string(seed));
  auto mesh = uniform_refine(*initial_mesh("l_shape"));
  auto space = build_space(mesh, 2);
  SemilinearProblem prob = make_case1();
  const SparseMat M = energy_matrix(prob, *space);
  const Factorization Mfac = factor(M);
  const Eigen::MatrixXd D(M.m);
  const auto dense = D.ldlt();

  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int rep_i = 0; rep_i < 20; ++rep_i) {
    const DualVec b = random_coefs(space->n_free_dofs(), rng, 1.0);
    const double a = dual_norm(Mfac, b);
    const double o = std::sqrt(b.dot(dense.solve(b)));
    worst = std::max(worst, std::abs(a - o) / o);
  }
  rep.observed = {worst};
  rep.bound = {1e-10};
  rep.passed = worst <= 1e-10;
  return rep;
}

PropertyReport check_energy_derivative(std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "energy_directional_derivative";
  rep.context = digest("seed=" + std::to_string(seed));
  auto mesh = uniform_refine(*initial_mesh("l_shape"));
  auto space = build_space(mesh, 2);
  SemilinearProblem prob = make_case1();
  std::mt19937_64 rng(seed);
  const CoefVec v = random_coefs(space->n_free_dofs(), rng, 0.02);
  const CoefVec w = random_coefs(space->n_free_dofs(), rng, 1.0);
  const double E0 = energy(prob, *space, v);
  const double slope = -residual_vector(prob, *space, v).dot(w);

  rep.passed = true;
  double prev = std::numeric_limits<double>::infinity();
  for (const double eps : {1e-4, 1e-5, 1e-6}) {
    const double fd = (energy(prob, *space, v + eps * w) - E0) / eps;
    const double err = std::abs(fd - slope) / std::abs(slope);
    rep.observed.push_back(err / eps);
    rep.bound.push_back(1e3);
    if (err / eps > 1e3 || err >= prev) rep.passed = false;
    prev = err;
  }
  return rep;
}

PropertyReport check_linear_newton(std::uint64_t seed) {
  PropertyReport rep;
  rep.name = "linear_problem_one_undamped_step";
  rep.context = digest("seed=" + std::to_string(seed));
  auto mesh = initial_mesh("unit_square");
  for (int i = 0; i < 3; ++i) mesh = uniform_refine(*mesh);
  auto space = build_space(mesh, 1);
  SemilinearProblem prob = make_laplace(1.0);
  const Factorization Mfac = factor(energy_matrix(prob, *space));
  const NewtonState s0 = initial_newton_state(
      prob, *space, Mfac, CoefVec::Zero(space->n_free_dofs()), 0.5);
  const NewtonState s1 = newton_step(prob, *space, Mfac, s0);
  rep.observed = {s1.residual_norm / s0.residual_norm, s1.last_delta};
  rep.bound = {1e-10, 1.0};
  rep.passed = s1.residual_norm <= 1e-10 * s0.residual_norm &&
               s1.last_delta == 1.0;
  return rep;
}

namespace {

RunConfig benchmark_config(const SemilinearProblem& prob, int p, bool uniform,
                           long max_triangles) {
  RunConfig config;
  config.problem = prob;
  config.initial_mesh = initial_mesh("l_shape");
  config.p = p;
  config.theta = 0.3;
  config.lambda_lin = 0.1;
  config.k_min = 1;
  config.uniform = uniform;
  config.max_triangles = max_triangles;
  config.max_cost = 5e6;
  return config;
}

}  // namespace

std::vector<PropertyReport> verify_all() {
  std::vector<PropertyReport> reports;
  reports.push_back(check_doerfler_minimality(1000, 101));
  reports.push_back(check_nvb_random_marking(1000, 102));
  reports.push_back(check_jacobian_fd(103));
  reports.push_back(check_dual_norm_oracle(104));
  reports.push_back(check_energy_derivative(105));
  reports.push_back(check_linear_newton(106));

  {
    auto mesh = uniform_refine(*initial_mesh("unit_square"));
    auto space = build_space(uniform_refine(*mesh), 1);
    SemilinearProblem lin = make_laplace(1.0);
    // a linear problem with constant c' keeps the ratio band tight
    lin.reaction = truncated_exp_reaction(0, 40.0);  // c == 1, c' == 0
    lin.tag = "laplace_shifted";
    PropertyReport r = check_linearization_equivalence(lin, *space, 50, 107);
    r.bound.back() = 10.0;
    r.passed = r.passed && r.observed.back() <= 10.0;
    reports.push_back(r);
  }
  {
    auto space = build_space(uniform_refine(*initial_mesh("l_shape")), 1);
    reports.push_back(
        check_linearization_equivalence(make_case1(), *space, 50, 108));
  }

  reports.push_back(check_axiom_A1_A2(make_laplace(1.0), 1, 109));
  reports.push_back(check_axiom_A1_A2(make_laplace(1.0), 2, 110));
  reports.push_back(check_axiom_A1_A2(make_case1(), 1, 111));

  const auto run1 =
      check_full_run(benchmark_config(make_case1(), 1, false, 4000), -0.65,
                     -0.35);
  reports.insert(reports.end(), run1.begin(), run1.end());
  const auto run2 =
      check_full_run(benchmark_config(make_case1(), 2, false, 4000), -1.2,
                     -0.8);
  reports.insert(reports.end(), run2.begin(), run2.end());
  const auto run3 =
      check_full_run(benchmark_config(make_case1(), 2, true, 6000), -0.45,
                     0.0);
  reports.insert(reports.end(), run3.begin(), run3.end());

  // uniform refinement is visibly suboptimal against the adaptive run
  {
    double adaptive_slope = 0.0, uniform_slope = 0.0;
    for (const auto& r : run2) {
      if (r.name.find("estimator_rate") != std::string::npos) {
        adaptive_slope = r.observed[0];
      }
    }
    for (const auto& r : run3) {
      if (r.name.find("estimator_rate") != std::string::npos) {
        uniform_slope = r.observed[0];
      }
    }
    PropertyReport r;
    r.name = "full_run/case1_p2/uniform_suboptimal";
    r.context = digest("uniform vs adaptive, p=2");
    r.observed = {uniform_slope, adaptive_slope};
    r.bound = {adaptive_slope + 0.2,
               std::numeric_limits<double>::infinity()};
    r.passed = uniform_slope > adaptive_slope + 0.2;
    reports.push_back(r);
  }
  return reports;
}

}  // namespace nailfem
