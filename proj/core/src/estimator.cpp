#include "nailfem/estimator.hpp"

#include <cmath>

namespace nailfem {

namespace {

/// Flux (A grad v - fvec)(x) of element t at physical points, evaluated
/// with the element's own diffusion block.
Eigen::Matrix<double, Eigen::Dynamic, 2> element_flux(
    const SemilinearProblem& prob, const FESpace& space, const CoefVec& v,
    int t, const Eigen::Matrix<double, Eigen::Dynamic, 2>& phys_points) {
  const FESpace::ElementMap em = space.element_map(t);
  const int root = space.mesh().triangle(t).root;
  const Mat2& A = prob.A(root);
  Eigen::Matrix<double, Eigen::Dynamic, 2> ref(phys_points.rows(), 2);
  for (Eigen::Index q = 0; q < phys_points.rows(); ++q) {
    ref.row(q) =
        (em.inv_jacobian * (phys_points.row(q).transpose() - em.origin))
            .transpose();
  }
  const Eigen::MatrixXd G = space.basis_ref_gradients(ref);
  const Eigen::VectorXd lc = space.local_coefficients(v, t);
  const int nl = space.n_local();

  Eigen::Matrix<double, Eigen::Dynamic, 2> flux(phys_points.rows(), 2);
  for (Eigen::Index q = 0; q < phys_points.rows(); ++q) {
    const Vec2 grad =
        em.inv_jacobian.transpose() * (G.middleRows(q * nl, nl).transpose() * lc);
    Vec2 f = A * grad;
    if (!prob.flux.is_zero()) {
      f -= prob.flux.value(root, phys_points.row(q).transpose());
    }
    flux.row(q) = f.transpose();
  }
  return flux;
}

}  // namespace

LocalEstimators local_estimators(const SemilinearProblem& prob,
                                 const FESpace& space, const CoefVec& v) {
  if (v.size() != space.n_free_dofs()) {
    throw Error("local_estimators: coefficient vector has wrong length");
  }
  const Triangulation& mesh = space.mesh();
  const int p = space.order();
  const int nl = space.n_local();
  const QuadRule& rule = tri_quadrature(2 * p + 2);
  const int nq = static_cast<int>(rule.weights.size());
  const Eigen::MatrixXd values = space.basis_values(rule.points);
  const Eigen::MatrixXd grads = space.basis_ref_gradients(rule.points);
  const Eigen::MatrixXd hessians = space.basis_ref_hessians(rule.points);
  const EdgeQuadRule& edge_rule = edge_quadrature(p + 1);  // exactness 2p+1
  const int neq = static_cast<int>(edge_rule.points.size());

  LocalEstimators est;
  est.eta_sq.resize(mesh.n_triangles());

  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = mesh.element_geometry(t);
    const FESpace::ElementMap em = space.element_map(t);
    const int root = mesh.triangle(t).root;
    const Mat2& A = prob.A(root);
    const Eigen::VectorXd lc = space.local_coefficients(v, t);

    // interior residual: f + div(A grad v - fvec) - b . grad v - c(v)
    double interior = 0.0;
    for (int q = 0; q < nq; ++q) {
      const Vec2 x = em.origin + em.jacobian * rule.points.row(q).transpose();
      const double vq = values.row(q).dot(lc);
      const Vec2 grad = em.inv_jacobian.transpose() *
                        (grads.middleRows(q * nl, nl).transpose() * lc);
      // physical Hessian entries of v via H = J^-T H_ref J^-1
      const Eigen::Vector3d href =
          hessians.middleRows(q * nl, nl).transpose() * lc;
      Mat2 Href;
      Href << href[0], href[1], href[1], href[2];
      const Mat2 H = em.inv_jacobian.transpose() * Href * em.inv_jacobian;
      double div_flux = A.cwiseProduct(H).sum();  // A constant per element
      if (!prob.flux.is_zero()) div_flux -= prob.flux.divergence(root, x);

      const double r = prob.load(x) + div_flux - prob.convection.dot(grad) -
                       prob.reaction.c(vq);
      interior += geom.area * rule.weights[q] * r * r;
    }

    // full squared jump norm over the interior edges of T
    double jumps = 0.0;
    const Triangle& tri = mesh.triangle(t);
    for (int e = 0; e < 3; ++e) {
      const int n = geom.edges[e].neighbor;
      if (n < 0) continue;
      const Vec2 a = mesh.vertex(tri.v[(e + 1) % 3]);
      const Vec2 b = mesh.vertex(tri.v[(e + 2) % 3]);
      Eigen::Matrix<double, Eigen::Dynamic, 2> pts(neq, 2);
      for (int q = 0; q < neq; ++q) {
        pts.row(q) = ((1.0 - edge_rule.points[q]) * a +
                      edge_rule.points[q] * b)
                         .transpose();
      }
      const auto flux_here = element_flux(prob, space, v, t, pts);
      const auto flux_there = element_flux(prob, space, v, n, pts);
      double edge_sq = 0.0;
      for (int q = 0; q < neq; ++q) {
        const double jump =
            (flux_here.row(q) - flux_there.row(q)).dot(geom.edges[e].normal);
        edge_sq += edge_rule.weights[q] * jump * jump;
      }
      jumps += geom.edges[e].length * edge_sq;
    }

    est.eta_sq[t] = geom.h * geom.h * interior + geom.h * jumps;
  }
  est.total = std::sqrt(est.eta_sq.sum());
  return est;
}

double restricted_total(const LocalEstimators& est, const MarkedSet& subset) {
  double s = 0.0;
  for (int t : subset.indices()) {
    if (t >= est.eta_sq.size()) {
      throw Error("restricted_total: subset does not match the estimator");
    }
    s += est.eta_sq[t];
  }
  return std::sqrt(s);
}

}  // namespace nailfem
