// Microbenchmarks of the hot paths: refinement, assembly, estimator, and
// the Riesz solve backing every damping trial.

#include <benchmark/benchmark.h>

#include <random>

#include <nailfem/estimator.hpp>
#include <nailfem/newton.hpp>

using namespace nailfem;

namespace {

std::shared_ptr<const Triangulation> medium_mesh() {
  static std::shared_ptr<const Triangulation> mesh = [] {
    auto m = initial_mesh("l_shape");
    for (int i = 0; i < 5; ++i) m = uniform_refine(*m);
    return m;
  }();
  return mesh;
}

CoefVec small_random(int n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N(0.0, 0.02);
  CoefVec v(n);
  for (int i = 0; i < n; ++i) v[i] = N(rng);
  return v;
}

void BM_uniform_refine(benchmark::State& state) {
  auto mesh = medium_mesh();
  for (auto _ : state) {
    benchmark::DoNotOptimize(uniform_refine(*mesh));
  }
  state.SetItemsProcessed(state.iterations() * mesh->n_triangles());
}
BENCHMARK(BM_uniform_refine);

void BM_build_space(benchmark::State& state) {
  auto mesh = medium_mesh();
  const int p = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_space(mesh, p));
  }
}
BENCHMARK(BM_build_space)->Arg(1)->Arg(2);

void BM_jacobian_assembly(benchmark::State& state) {
  auto space = build_space(medium_mesh(), static_cast<int>(state.range(0)));
  const SemilinearProblem prob = make_case1();
  const CoefVec v = small_random(space->n_free_dofs());
  for (auto _ : state) {
    benchmark::DoNotOptimize(jacobian_matrix(prob, *space, v));
  }
}
BENCHMARK(BM_jacobian_assembly)->Arg(1)->Arg(2);

void BM_local_estimators(benchmark::State& state) {
  auto space = build_space(medium_mesh(), static_cast<int>(state.range(0)));
  const SemilinearProblem prob = make_case1();
  const CoefVec v = small_random(space->n_free_dofs());
  for (auto _ : state) {
    benchmark::DoNotOptimize(local_estimators(prob, *space, v));
  }
}
BENCHMARK(BM_local_estimators)->Arg(1)->Arg(2);

void BM_riesz_solve(benchmark::State& state) {
  auto space = build_space(medium_mesh(), 2);
  const SemilinearProblem prob = make_case1();
  const Factorization Mfac = factor(energy_matrix(prob, *space));
  const DualVec b =
      residual_vector(prob, *space, CoefVec::Zero(space->n_free_dofs()));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dual_norm(Mfac, b));
  }
}
BENCHMARK(BM_riesz_solve);

}  // namespace

BENCHMARK_MAIN();
