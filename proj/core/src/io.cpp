#include "nailfem/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace nailfem {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

std::string history_csv(const RunHistory& h) {
  std::ostringstream os;
  os << "ell,k,total_step,n_triangles,n_free_dofs,residual_norm,estimator,"
        "quasi_error,delta_used,delta_min,cumulative_cost,energy\n";
  for (const StepRecord& r : h.records) {
    os << r.ell << ',' << r.k << ',' << r.total_step << ',' << r.n_triangles
       << ',' << r.n_free_dofs << ',' << fmt(r.residual_norm) << ','
       << fmt(r.estimator_total) << ',' << fmt(r.quasi_error) << ',';
    if (!std::isnan(r.delta_used)) os << fmt(r.delta_used);
    os << ',' << fmt(r.delta_min) << ',' << fmt(r.cumulative_cost) << ',';
    if (r.energy) os << fmt(*r.energy);
    os << '\n';
  }
  return os.str();
}

RunSummary make_summary(const RunHistory& h, bool jacobian_symmetric) {
  RunSummary s;
  s.jacobian_symmetric = jacobian_symmetric;
  s.termination_reason = h.termination_reason;
  s.levels = static_cast<int>(h.exits.size());
  for (const LevelExit& e : h.exits) s.total_newton_steps += e.k_final;
  if (!h.records.empty()) s.final_delta_min = h.records.back().delta_min;
  for (const ReductionFactor& r : reduction_factors(h)) {
    s.max_reduction_factor = std::max(s.max_reduction_factor, r.value);
  }
  try {
    s.rate_slope_estimator = fit_rate_last_decade(estimator_series(h)).slope;
  } catch (const Error&) {
  }
  try {
    s.rate_slope_quasi_error =
        fit_rate_last_decade(quasi_error_series(h)).slope;
  } catch (const Error&) {
  }
  return s;
}

std::string summary_json(const RunSummary& s, const RunConfig& config) {
  nlohmann::ordered_json j;
  j["rate_slope_estimator"] =
      s.rate_slope_estimator ? nlohmann::json(*s.rate_slope_estimator)
                             : nlohmann::json(nullptr);
  j["rate_slope_quasi_error"] =
      s.rate_slope_quasi_error ? nlohmann::json(*s.rate_slope_quasi_error)
                               : nlohmann::json(nullptr);
  j["final_delta_min"] = s.final_delta_min;
  j["max_reduction_factor"] = s.max_reduction_factor;
  j["levels"] = s.levels;
  j["total_newton_steps"] = s.total_newton_steps;
  j["jacobian_symmetric"] = s.jacobian_symmetric;
  j["termination_reason"] = s.termination_reason;
  j["problem"] = config.problem.tag;
  j["p"] = config.p;
  j["theta"] = config.theta;
  j["lambda_lin"] = config.lambda_lin;
  j["k_min"] = config.k_min;
  j["uniform"] = config.uniform;
  return j.dump(2) + "\n";
}

void write_run_outputs(const std::string& dir, const RunHistory& h,
                       const RunConfig& config) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "meshes", ec);
  if (ec) throw Error("cannot create output directory '" + dir + "'");

  {
    std::ofstream f(fs::path(dir) / "history.csv", std::ios::binary);
    if (!f) throw Error("cannot write history.csv under '" + dir + "'");
    f << history_csv(h);
  }
  {
    std::ofstream f(fs::path(dir) / "summary.json", std::ios::binary);
    f << summary_json(make_summary(h, config.problem.symmetric()), config);
  }
  for (std::size_t ell = 0; ell < h.meshes.size(); ++ell) {
    std::ofstream f(fs::path(dir) / "meshes" /
                        ("level_" + std::to_string(ell) + ".txt"),
                    std::ios::binary);
    h.meshes[ell]->write(f);
  }
}

}  // namespace nailfem
