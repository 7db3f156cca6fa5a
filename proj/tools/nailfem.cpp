// Command-line driver: adaptive runs (history.csv, summary.json, per-level
// meshes) and the executable property suite (`nailfem verify`).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <nailfem/io.hpp>
#include <nailfem/verify.hpp>

namespace {

using namespace nailfem;

/// Parses a polynomial given as comma-separated monomials "c i j", meaning
/// c * x^i * y^j, e.g. "2 0 0, -1 1 0".
std::function<double(const Vec2&)> parse_polynomial(const std::string& text) {
  struct Term {
    double c;
    int i, j;
  };
  std::vector<Term> terms;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::stringstream ts(part);
    Term t{};
    if (!(ts >> t.c >> t.i >> t.j) || t.i < 0 || t.j < 0) {
      throw Error("config key 'f': malformed polynomial term '" + part +
                  "' (expected 'c i j')");
    }
    terms.push_back(t);
  }
  if (terms.empty()) throw Error("config key 'f': empty polynomial");
  return [terms](const Vec2& x) {
    double v = 0.0;
    for (const auto& t : terms) {
      v += t.c * std::pow(x.x(), t.i) * std::pow(x.y(), t.j);
    }
    return v;
  };
}

int run_solver(int argc, char** argv) {
  CLI::App app{"nailfem: adaptive damped-Newton FEM for semilinear "
               "elliptic problems"};
  app.set_config("--config", "",
                 "flat key=value configuration file (flags win on conflict)");

  std::string problem = "case1";
  app.add_option("--problem", problem, "case1 | case2 | custom")
      ->check(CLI::IsMember({"case1", "case2", "custom"}));
  int p = 2;
  app.add_option("--p", p, "polynomial degree")->check(CLI::Range(1, 4));
  double theta = 0.3;
  app.add_option("--theta", theta, "bulk marking parameter in (0,1]");
  double lambda_lin = 0.1;
  app.add_option("--lambda-lin", lambda_lin, "Newton stopping parameter");
  int kmin = 1;
  app.add_option("--kmin", kmin, "minimal Newton steps per level");
  long max_triangles = -1;
  app.add_option("--max-triangles", max_triangles,
                 "stop after solving a level with at least this many "
                 "triangles");
  double max_cost = 5e6;
  app.add_option("--max-cost", max_cost, "cumulative-cost budget");
  double tol = -1.0;
  app.add_option("--tol", tol, "stop once the estimator falls below");
  bool uniform = false;
  app.add_flag("--uniform", uniform, "uniform refinement (theta = 1)");
  std::string out_dir = "nailfem_out";
  app.add_option("--out", out_dir, "output directory");
  std::string mesh_file;
  app.add_option("--mesh", mesh_file,
                 "initial mesh file (defaults to the l_shape domain)");

  // custom-problem coefficients
  double a11 = 1.0, a12 = 0.0, a22 = 1.0, b1 = 0.0, b2 = 0.0;
  app.add_option("--a11", a11, "diffusion entry (custom problem)");
  app.add_option("--a12", a12, "diffusion entry (custom problem)");
  app.add_option("--a22", a22, "diffusion entry (custom problem)");
  app.add_option("--b1", b1, "convection x-component (custom problem)");
  app.add_option("--b2", b2, "convection y-component (custom problem)");
  std::string f_poly = "2 0 0";
  app.add_option("--f", f_poly,
                 "polynomial load as comma-separated 'c i j' monomials");
  std::string reaction_kind = "truncexp";
  app.add_option("--reaction", reaction_kind, "truncexp | none")
      ->check(CLI::IsMember({"truncexp", "none"}));
  int n_trunc = 11;
  app.add_option("--n-trunc", n_trunc, "reaction truncation order N");
  double scale = 40.0;
  app.add_option("--scale", scale, "reaction scale factor");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig config;
    if (problem == "case1") {
      config.problem = make_case1();
    } else if (problem == "case2") {
      config.problem = make_case2();
    } else {
      SemilinearProblem prob;
      Mat2 A;
      A << a11, a12, a12, a22;
      prob.diffusion = {A};
      const double tr = A.trace();
      const double disc =
          std::sqrt(std::max(0.0, tr * tr / 4.0 - A.determinant()));
      prob.alpha_min = tr / 2.0 - disc;
      prob.alpha_max = tr / 2.0 + disc;
      prob.convection = Vec2(b1, b2);
      prob.reaction = (reaction_kind == "none")
                          ? zero_reaction()
                          : truncated_exp_reaction(n_trunc, scale);
      prob.load = parse_polynomial(f_poly);
      prob.tag = "custom";
      validate_problem(prob);
      config.problem = prob;
    }
    config.initial_mesh =
        initial_mesh(mesh_file.empty() ? "l_shape" : mesh_file);
    config.p = p;
    config.theta = theta;
    config.lambda_lin = lambda_lin;
    config.k_min = kmin;
    config.uniform = uniform;
    config.max_triangles = max_triangles;
    config.max_cost = max_cost;
    config.tol = tol;
    config.out_dir = out_dir;

    const RunHistory history = nailfem_run(config);
    write_run_outputs(out_dir, history, config);

    const RunSummary s = make_summary(history, config.problem.symmetric());
    std::printf("levels: %d, newton steps: %ld, final #T: %ld (%s)\n",
                s.levels, s.total_newton_steps,
                history.records.back().n_triangles,
                s.termination_reason.c_str());
    if (s.rate_slope_estimator) {
      std::printf("estimator rate slope vs cost: %.4f\n",
                  *s.rate_slope_estimator);
    }
    std::printf("outputs written to %s\n", out_dir.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

int run_verify(int argc, char** argv) {
  CLI::App app{"nailfem verify: executable property suite"};
  std::string out_file;
  app.add_option("--out", out_file,
                 "write the JSON report array to this file (default stdout)");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto reports = verify_all();
    const std::string json = reports_to_json(reports);
    if (out_file.empty()) {
      std::cout << json;
    } else {
      std::ofstream f(out_file, std::ios::binary);
      if (!f) throw Error("cannot write '" + out_file + "'");
      f << json;
    }
    int failed = 0;
    for (const auto& r : reports) failed += r.passed ? 0 : 1;
    std::fprintf(stderr, "%zu checks, %d failed\n", reports.size(), failed);
    return failed == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1 && std::string(argv[1]) == "verify") {
    return run_verify(argc - 1, argv + 1);
  }
  return run_solver(argc, argv);
}
