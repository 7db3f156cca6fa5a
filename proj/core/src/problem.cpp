#include "nailfem/problem.hpp"

#include <cmath>
#include <vector>

namespace nailfem {

double truncated_exp(int order, double x) {
  if (order < 0) throw Error("truncated_exp: order must be >= 0");
  double p = 1.0;
  for (int n = order; n >= 1; --n) p = 1.0 + p * x / n;
  return p;
}

Reaction truncated_exp_reaction(int order, double scale) {
  Reaction r;
  r.trunc_order = order;
  r.c = [order, scale](double u) { return truncated_exp(order, scale * u); };
  r.dc = [order, scale](double u) {
    return order == 0 ? 0.0
                      : scale * truncated_exp(order - 1, scale * u);
  };
  r.antiderivative = [order, scale](double u) {
    if (scale == 0.0) return u;  // c == 1
    return (truncated_exp(order + 1, scale * u) - 1.0) / scale;
  };
  // |c^(N)| = |scale|^N exp_0 = |scale|^N
  r.growth_bound = std::pow(std::abs(scale), order);
  return r;
}

Reaction zero_reaction() {
  Reaction r;
  r.c = [](double) { return 0.0; };
  r.dc = [](double) { return 0.0; };
  r.antiderivative = [](double) { return 0.0; };
  r.trunc_order = 0;
  r.growth_bound = 0.0;
  return r;
}

void validate_problem(const SemilinearProblem& prob) {
  for (std::size_t i = 0; i < prob.diffusion.size(); ++i) {
    const Mat2& A = prob.diffusion[i];
    if (std::abs(A(0, 1) - A(1, 0)) > 1e-14 * (1.0 + A.cwiseAbs().maxCoeff())) {
      throw Error("problem: diffusion matrix " + std::to_string(i) +
                  " is not symmetric");
    }
    // closed-form eigenvalues of a symmetric 2x2
    const double tr = A(0, 0) + A(1, 1);
    const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    const double lmin = tr / 2.0 - disc, lmax = tr / 2.0 + disc;
    if (lmin < prob.alpha_min - 1e-12 || lmax > prob.alpha_max + 1e-12 ||
        prob.alpha_min <= 0.0) {
      throw Error("problem: diffusion eigenvalues [" + std::to_string(lmin) +
                  ", " + std::to_string(lmax) +
                  "] violate declared bounds [alpha_min, alpha_max]");
    }
  }
  if (!prob.reaction.c || !prob.reaction.dc) {
    throw Error("problem: reaction callbacks missing");
  }
  for (double xi = -8.0; xi <= 8.0; xi += 0.25) {
    if (prob.reaction.dc(xi) < 0.0) {
      throw Error("problem: reaction derivative is negative at xi = " +
                  std::to_string(xi) + " (monotonicity violated)");
    }
  }
  if (!prob.load) throw Error("problem: load callback missing");
}

SemilinearProblem make_case1() {
  SemilinearProblem p;
  p.diffusion = {Mat2::Identity()};
  p.alpha_min = p.alpha_max = 1.0;
  p.convection = Vec2::Zero();
  p.reaction = truncated_exp_reaction(11, 40.0);
  p.load = [](const Vec2&) { return 2.0; };
  p.tag = "case1";
  validate_problem(p);
  return p;
}

SemilinearProblem make_case2() {
  SemilinearProblem p = make_case1();
  p.convection = Vec2(-50.0, 0.0);
  p.tag = "case2";
  return p;
}

SemilinearProblem make_laplace(double f_const) {
  SemilinearProblem p;
  p.diffusion = {Mat2::Identity()};
  p.alpha_min = p.alpha_max = 1.0;
  p.reaction = zero_reaction();
  p.load = [f_const](const Vec2&) { return f_const; };
  p.tag = "laplace";
  return p;
}

namespace {

/// Shared per-rule basis tables; identical for every element.
struct AssemblyTables {
  const QuadRule* rule;
  Eigen::MatrixXd values;     // nq x nl
  Eigen::MatrixXd gradients;  // (nq*nl) x 2, reference coordinates
};

AssemblyTables make_tables(const FESpace& space) {
  AssemblyTables tb;
  tb.rule = &tri_quadrature(2 * space.order() + 2);
  tb.values = space.basis_values(tb.rule->points);
  tb.gradients = space.basis_ref_gradients(tb.rule->points);
  return tb;
}

}  // namespace

DualVec residual_vector(const SemilinearProblem& prob, const FESpace& space,
                        const CoefVec& v) {
  if (v.size() != space.n_free_dofs()) {
    throw Error("residual_vector: coefficient vector has wrong length");
  }
  const Triangulation& mesh = space.mesh();
  const AssemblyTables tb = make_tables(space);
  const int nl = space.n_local();
  const int nq = static_cast<int>(tb.rule->weights.size());

  DualVec out = DualVec::Zero(space.n_free_dofs());
  Eigen::MatrixXd phys_grad(nl, 2);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const FESpace::ElementMap em = space.element_map(t);
    const Mat2 invJt = em.inv_jacobian.transpose();
    const double area = 0.5 * em.det;
    const int root = mesh.triangle(t).root;
    const Mat2& A = prob.A(root);
    const Eigen::VectorXd lc = space.local_coefficients(v, t);
    const std::vector<int>& dofs = space.element_dofs(t);

    Eigen::VectorXd local = Eigen::VectorXd::Zero(nl);
    for (int q = 0; q < nq; ++q) {
      phys_grad = tb.gradients.middleRows(q * nl, nl) * em.inv_jacobian;
      const Vec2 x =
          em.origin + em.jacobian * tb.rule->points.row(q).transpose();
      const double w = area * tb.rule->weights[q];

      const double vq = tb.values.row(q).dot(lc);
      const Vec2 gv = phys_grad.transpose() * lc;
      const double fq = prob.load(x);
      const double cq = prob.reaction.c(vq);
      const double bgv = prob.convection.dot(gv);
      const Vec2 Agv = A * gv;

      for (int l = 0; l < nl; ++l) {
        double r = fq * tb.values(q, l) - phys_grad.row(l).dot(Agv) -
                   (bgv + cq) * tb.values(q, l);
        if (!prob.flux.is_zero()) {
          r += phys_grad.row(l).dot(prob.flux.value(root, x));
        }
        local[l] += w * r;
      }
    }
    for (int l = 0; l < nl; ++l) {
      const int fi = space.free_index(dofs[l]);
      if (fi >= 0) out[fi] += local[l];
    }
  }
  return out;
}

namespace {

/// Assembles sum over elements of the local matrices produced by
/// `local_kernel(t, out)`; deterministic element-order accumulation.
SparseMat assemble_matrix(
    const FESpace& space, bool symmetric,
    const std::function<void(int, Eigen::MatrixXd&)>& local_kernel) {
  const Triangulation& mesh = space.mesh();
  const int nl = space.n_local();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.n_triangles()) * nl * nl);
  Eigen::MatrixXd local(nl, nl);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    local.setZero();
    local_kernel(t, local);
    const std::vector<int>& dofs = space.element_dofs(t);
    for (int i = 0; i < nl; ++i) {
      const int fi = space.free_index(dofs[i]);
      if (fi < 0) continue;
      for (int j = 0; j < nl; ++j) {
        const int fj = space.free_index(dofs[j]);
        if (fj < 0) continue;
        trips.emplace_back(fi, fj, local(i, j));
      }
    }
  }
  SparseMat M;
  M.symmetric = symmetric;
  M.m.resize(space.n_free_dofs(), space.n_free_dofs());
  M.m.setFromTriplets(trips.begin(), trips.end());
  M.m.makeCompressed();
  return M;
}

}  // namespace

SparseMat jacobian_matrix(const SemilinearProblem& prob, const FESpace& space,
                          const CoefVec& v) {
  if (v.size() != space.n_free_dofs()) {
    throw Error("jacobian_matrix: coefficient vector has wrong length");
  }
  const Triangulation& mesh = space.mesh();
  const AssemblyTables tb = make_tables(space);
  const int nl = space.n_local();
  const int nq = static_cast<int>(tb.rule->weights.size());
  const bool with_convection = !prob.symmetric();

  auto kernel = [&](int t, Eigen::MatrixXd& local) {
    const FESpace::ElementMap em = space.element_map(t);
    const double area = 0.5 * em.det;
    const Mat2& A = prob.A(mesh.triangle(t).root);
    const Eigen::VectorXd lc = space.local_coefficients(v, t);
    Eigen::MatrixXd phys_grad(nl, 2);
    for (int q = 0; q < nq; ++q) {
      phys_grad = tb.gradients.middleRows(q * nl, nl) * em.inv_jacobian;
      const double w = area * tb.rule->weights[q];
      const double vq = tb.values.row(q).dot(lc);
      const double dcq = prob.reaction.dc(vq);

      const Eigen::MatrixXd Agrad = phys_grad * A.transpose();  // A symmetric
      local.noalias() += w * (phys_grad * Agrad.transpose());
      local.noalias() += (w * dcq) * (tb.values.row(q).transpose() *
                                      tb.values.row(q));
      if (with_convection) {
        const Eigen::VectorXd bg = phys_grad * prob.convection;
        local.noalias() += w * (tb.values.row(q).transpose() * bg.transpose());
      }
    }
  };
  return assemble_matrix(space, !with_convection, kernel);
}

SparseMat energy_matrix(const SemilinearProblem& prob, const FESpace& space) {
  const Triangulation& mesh = space.mesh();
  const AssemblyTables tb = make_tables(space);
  const int nl = space.n_local();
  const int nq = static_cast<int>(tb.rule->weights.size());

  auto kernel = [&](int t, Eigen::MatrixXd& local) {
    const FESpace::ElementMap em = space.element_map(t);
    const double area = 0.5 * em.det;
    const Mat2& A = prob.A(mesh.triangle(t).root);
    Eigen::MatrixXd phys_grad(nl, 2);
    for (int q = 0; q < nq; ++q) {
      phys_grad = tb.gradients.middleRows(q * nl, nl) * em.inv_jacobian;
      const double w = area * tb.rule->weights[q];
      const Eigen::MatrixXd Agrad = phys_grad * A.transpose();
      local.noalias() += w * (phys_grad * Agrad.transpose());
    }
  };
  return assemble_matrix(space, true, kernel);
}

double energy(const SemilinearProblem& prob, const FESpace& space,
              const CoefVec& v) {
  if (!prob.symmetric()) {
    throw Error("energy: only defined for problems with b = 0");
  }
  if (!prob.reaction.antiderivative) {
    throw Error("energy: reaction antiderivative missing");
  }
  const Triangulation& mesh = space.mesh();
  const AssemblyTables tb = make_tables(space);
  const int nl = space.n_local();
  const int nq = static_cast<int>(tb.rule->weights.size());

  double E = 0.0;
  Eigen::MatrixXd phys_grad(nl, 2);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const FESpace::ElementMap em = space.element_map(t);
    const double area = 0.5 * em.det;
    const int root = mesh.triangle(t).root;
    const Mat2& A = prob.A(root);
    const Eigen::VectorXd lc = space.local_coefficients(v, t);
    double el = 0.0;
    for (int q = 0; q < nq; ++q) {
      phys_grad = tb.gradients.middleRows(q * nl, nl) * em.inv_jacobian;
      const Vec2 x =
          em.origin + em.jacobian * tb.rule->points.row(q).transpose();
      const double w = area * tb.rule->weights[q];
      const double vq = tb.values.row(q).dot(lc);
      const Vec2 gv = phys_grad.transpose() * lc;
      double val = 0.5 * gv.dot(A * gv) + prob.reaction.antiderivative(vq) -
                   prob.load(x) * vq;
      if (!prob.flux.is_zero()) val -= prob.flux.value(root, x).dot(gv);
      el += w * val;
    }
    E += el;
  }
  return E;
}

double energy_norm(const SparseMat& energy_mat, const CoefVec& v) {
  return std::sqrt(std::max(0.0, v.dot(energy_mat.m * v)));
}

}  // namespace nailfem
