#include <doctest.h>

#include <cmath>
#include <random>

#include <nailfem/estimator.hpp>
#include <nailfem/problem.hpp>

using namespace nailfem;

namespace {

CoefVec random_coefs(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> N(0.0, scale);
  CoefVec v(n);
  for (int i = 0; i < n; ++i) v[i] = N(rng);
  return v;
}

/// Independent p=1 stiffness assembly via the cotangent formula:
/// K_ij = (cot gamma_ij) / 2 summed over elements sharing edge (i,j).
Eigen::MatrixXd cotangent_stiffness(const Triangulation& mesh,
                                    const FESpace& space) {
  const int n = space.n_free_dofs();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i) {
      const int a = tri.v[(i + 1) % 3], b = tri.v[(i + 2) % 3], c = tri.v[i];
      const Vec2 u = mesh.vertex(a) - mesh.vertex(c);
      const Vec2 w = mesh.vertex(b) - mesh.vertex(c);
      const double cot =
          u.dot(w) / std::abs(u.x() * w.y() - u.y() * w.x());
      const int fa = space.free_index(a), fb = space.free_index(b);
      if (fa >= 0 && fb >= 0) {
        K(fa, fb) -= 0.5 * cot;
        K(fb, fa) -= 0.5 * cot;
      }
      if (fa >= 0) K(fa, fa) += 0.5 * cot;
      if (fb >= 0) K(fb, fb) += 0.5 * cot;
    }
  }
  return K;
}

}  // namespace

TEST_CASE("truncated_exp") {
  CHECK(truncated_exp(11, 0.0) == 1.0);
  CHECK(truncated_exp(1, 0.7) == doctest::Approx(1.7).epsilon(1e-15));
  CHECK(truncated_exp(2, 1.0) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK_THROWS_AS(truncated_exp(-1, 0.0), Error);
  // Horner matches the naive sum
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    const double x = U(rng);
    const int N = rep % 12;
    double naive = 0.0, term = 1.0;
    for (int k = 0; k <= N; ++k) {
      naive += term;
      term *= x / (k + 1);
    }
    CHECK(truncated_exp(N, x) == doctest::Approx(naive).epsilon(1e-13));
  }
}

TEST_CASE("problem validation") {
  CHECK(make_case1().symmetric());
  CHECK_FALSE(make_case2().symmetric());

  SemilinearProblem bad = make_case1();
  bad.diffusion = {(Mat2() << 1.0, 0.5, 0.0, 1.0).finished()};
  CHECK_THROWS_WITH_AS(validate_problem(bad),
                       doctest::Contains("symmetric"), Error);

  bad = make_case1();
  bad.alpha_max = 0.5;  // eigenvalues of I exceed the declared bound
  CHECK_THROWS_AS(validate_problem(bad), Error);

  bad = make_case1();
  bad.reaction.dc = [](double u) { return -1.0 - u * u; };
  CHECK_THROWS_WITH_AS(validate_problem(bad),
                       doctest::Contains("monotonicity"), Error);
}

TEST_CASE("residual_vector special cases") {
  auto mesh = uniform_refine(*initial_mesh("unit_square"));
  auto space = build_space(mesh, 2);

  SUBCASE("all data zero") {
    auto prob = make_laplace(0.0);
    const DualVec r =
        residual_vector(prob, *space, CoefVec::Zero(space->n_free_dofs()));
    CHECK(r.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("case1 data at v = 0 gives the basis integrals") {
    // f = 2 and c(0) = 1, so entry i = int (2 - 1) phi_i = int phi_i.
    SemilinearProblem prob = make_case1();
    const DualVec r =
        residual_vector(prob, *space, CoefVec::Zero(space->n_free_dofs()));

    // independent oracle: fixed 6-point rule of exactness 4 (weights from
    // the classical symmetric rule), applied element by element
    const double w1 = 0.223381589678011, w2 = 0.109951743655322;
    const double a1 = 0.445948490915965, a2 = 0.091576213509771;
    const Eigen::Matrix<double, 6, 2> pts =
        (Eigen::Matrix<double, 6, 2>() << a1, a1, 1 - 2 * a1, a1, a1,
         1 - 2 * a1, a2, a2, 1 - 2 * a2, a2, a2, 1 - 2 * a2)
            .finished();
    const Eigen::Matrix<double, 6, 1> wts =
        (Eigen::Matrix<double, 6, 1>() << w1, w1, w1, w2, w2, w2).finished();

    DualVec oracle = DualVec::Zero(space->n_free_dofs());
    const Eigen::MatrixXd B = space->basis_values(pts);
    for (int t = 0; t < mesh->n_triangles(); ++t) {
      const double area = mesh->area(t);
      const auto& dofs = space->element_dofs(t);
      for (int l = 0; l < space->n_local(); ++l) {
        const int fi = space->free_index(dofs[l]);
        if (fi < 0) continue;
        for (int q = 0; q < 6; ++q) oracle[fi] += area * wts[q] * B(q, l);
      }
    }
    CHECK((r - oracle).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("jacobian is the derivative of the residual (finite differences)") {
  auto mesh = uniform_refine(*initial_mesh("l_shape"));
  auto space = build_space(mesh, 2);
  SemilinearProblem prob = make_case1();
  // moderate amplitude keeps 40u in the well-scaled regime
  std::mt19937_64 rng(17);
  const CoefVec v = random_coefs(space->n_free_dofs(), rng, 0.02);
  const CoefVec w = random_coefs(space->n_free_dofs(), rng, 1.0);

  const DualVec r0 = residual_vector(prob, *space, v);
  const SparseMat J = jacobian_matrix(prob, *space, v);
  const DualVec Jw = J.m * w;

  double prev_err = -1.0;
  for (const double eps : {1e-4, 1e-5, 1e-6}) {
    const DualVec r1 = residual_vector(prob, *space, v + eps * w);
    const double err = ((r1 - r0) / eps + Jw).norm() / Jw.norm();
    CHECK(err < 50.0 * eps);  // first order in eps
    if (prev_err > 0.0) CHECK(err < prev_err);
    prev_err = err;
  }
}

TEST_CASE("jacobian structure") {
  auto mesh = uniform_refine(*initial_mesh("l_shape"));
  auto space = build_space(mesh, 1);
  std::mt19937_64 rng(11);
  const CoefVec v = random_coefs(space->n_free_dofs(), rng, 0.01);

  SUBCASE("symmetric for b = 0") {
    const SparseMat J = jacobian_matrix(make_case1(), *space, v);
    CHECK(J.symmetric);
    const Eigen::MatrixXd D(J.m);
    CHECK((D - D.transpose()).cwiseAbs().maxCoeff() <=
          1e-12 * D.cwiseAbs().maxCoeff());
  }

  SUBCASE("nonsymmetric flag for case2") {
    const SparseMat J = jacobian_matrix(make_case2(), *space, v);
    CHECK_FALSE(J.symmetric);
  }

  SUBCASE("pure Laplace equals the cotangent stiffness oracle") {
    auto prob = make_laplace(1.0);
    const SparseMat J =
        jacobian_matrix(prob, *space, CoefVec::Zero(space->n_free_dofs()));
    const Eigen::MatrixXd K = cotangent_stiffness(*mesh, *space);
    CHECK((Eigen::MatrixXd(J.m) - K).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("energy_matrix") {
  auto mesh = uniform_refine(*initial_mesh("l_shape"));
  auto space = build_space(mesh, 1);
  auto prob = make_case1();
  const SparseMat M = energy_matrix(prob, *space);
  CHECK(M.symmetric);

  // equals the Laplace stiffness for A = I
  const Eigen::MatrixXd K = cotangent_stiffness(*mesh, *space);
  CHECK((Eigen::MatrixXd(M.m) - K).cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 100; ++rep) {
    const CoefVec x = random_coefs(space->n_free_dofs(), rng);
    if (x.norm() == 0.0) continue;
    CHECK(x.dot(M.m * x) > 0.0);
  }
}

TEST_CASE("energy and its directional derivative") {
  auto mesh = uniform_refine(*initial_mesh("l_shape"));
  auto space = build_space(mesh, 2);
  SemilinearProblem prob = make_case1();

  CHECK(energy(prob, *space, CoefVec::Zero(space->n_free_dofs())) == 0.0);
  CHECK_THROWS_AS(
      energy(make_case2(), *space, CoefVec::Zero(space->n_free_dofs())),
      Error);

  std::mt19937_64 rng(31);
  const CoefVec v = random_coefs(space->n_free_dofs(), rng, 0.02);
  const CoefVec w = random_coefs(space->n_free_dofs(), rng, 1.0);
  const double E0 = energy(prob, *space, v);
  const double slope = -residual_vector(prob, *space, v).dot(w);
  double prev_err = -1.0;
  for (const double eps : {1e-4, 1e-5, 1e-6}) {
    const double fd = (energy(prob, *space, v + eps * w) - E0) / eps;
    const double err = std::abs(fd - slope) / std::abs(slope);
    CHECK(err < 1e3 * eps);
    if (prev_err > 0.0) CHECK(err < prev_err);
    prev_err = err;
  }
}

TEST_CASE("monotonicity and coercivity probes") {
  auto mesh = uniform_refine(*initial_mesh("l_shape"));
  auto space = build_space(mesh, 1);
  SemilinearProblem prob = make_case1();
  const SparseMat M = energy_matrix(prob, *space);
  std::mt19937_64 rng(41);

  for (int rep = 0; rep < 50; ++rep) {
    const CoefVec v = random_coefs(space->n_free_dofs(), rng, 0.02);
    const CoefVec w = random_coefs(space->n_free_dofs(), rng, 0.02);
    const DualVec rv = residual_vector(prob, *space, v);
    const DualVec rw = residual_vector(prob, *space, w);
    const CoefVec d = v - w;
    const double lhs = (rw - rv).dot(d);
    const double rhs =
        prob.alpha_min / prob.alpha_max * d.dot(M.m * d);
    CHECK(lhs >= rhs - 1e-12 * std::abs(rhs));

    const SparseMat J = jacobian_matrix(prob, *space, v);
    CHECK(w.dot(J.m * w) >=
          prob.alpha_min / prob.alpha_max * w.dot(M.m * w) - 1e-12);
  }
}

TEST_CASE("quadrature exactness is settled at 2p+2") {
  // doubling the quadrature degree changes the residual only marginally
  auto mesh = uniform_refine(*initial_mesh("l_shape"));
  SemilinearProblem prob = make_case1();
  for (int p : {1, 2}) {
    auto space = build_space(mesh, p);
    std::mt19937_64 rng(53);
    const CoefVec v = random_coefs(space->n_free_dofs(), rng, 0.02);
    const DualVec r = residual_vector(prob, *space, v);

    // independent accumulation with a rule of twice the exactness
    const QuadRule& fine_rule = tri_quadrature(2 * (2 * p + 2));
    const Eigen::MatrixXd B = space->basis_values(fine_rule.points);
    const Eigen::MatrixXd G = space->basis_ref_gradients(fine_rule.points);
    DualVec r2 = DualVec::Zero(space->n_free_dofs());
    const int nl = space->n_local();
    for (int t = 0; t < mesh->n_triangles(); ++t) {
      const auto em = space->element_map(t);
      const auto& dofs = space->element_dofs(t);
      const Eigen::VectorXd lc = space->local_coefficients(v, t);
      for (int q = 0; q < fine_rule.weights.size(); ++q) {
        const Eigen::MatrixXd pg = G.middleRows(q * nl, nl) * em.inv_jacobian;
        const Vec2 x =
            em.origin + em.jacobian * fine_rule.points.row(q).transpose();
        const double w = 0.5 * em.det * fine_rule.weights[q];
        const double vq = B.row(q).dot(lc);
        const Vec2 gv = pg.transpose() * lc;
        for (int l = 0; l < nl; ++l) {
          const int fi = space->free_index(dofs[l]);
          if (fi < 0) continue;
          r2[fi] += w * (prob.load(x) * B(q, l) - pg.row(l).dot(gv) -
                         prob.reaction.c(vq) * B(q, l));
        }
      }
    }
    CHECK((r - r2).norm() / r2.norm() < 1e-8);
  }
}
