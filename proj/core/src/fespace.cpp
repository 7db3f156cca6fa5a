#include "nailfem/fespace.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

namespace nailfem {

namespace {

/// Gauss-Legendre on [-1,1] by Golub-Welsch; nodes ascending.
void gauss_legendre(int n, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  if (n == 1) {
    x = Eigen::VectorXd::Zero(1);
    w = Eigen::VectorXd::Constant(1, 2.0);
    return;
  }
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x = es.eigenvalues();
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    w[i] = 2.0 * v0 * v0;
  }
}

}  // namespace

const EdgeQuadRule& edge_quadrature(int n_points) {
  static std::map<int, EdgeQuadRule> cache;
  auto it = cache.find(n_points);
  if (it != cache.end()) return it->second;
  Eigen::VectorXd x, w;
  gauss_legendre(n_points, x, w);
  EdgeQuadRule r;
  r.points = (x.array() + 1.0) / 2.0;
  r.weights = w / 2.0;
  return cache.emplace(n_points, std::move(r)).first->second;
}

const QuadRule& tri_quadrature(int degree) {
  static std::map<int, QuadRule> cache;
  auto it = cache.find(degree);
  if (it != cache.end()) return it->second;

  // Collapsed tensor rule: u = s(1-t), v = t with Jacobian (1-t). A
  // polynomial of total degree D has degree <= D in s and <= D+1 in t
  // after the substitution (including the Jacobian).
  const int nx = (degree + 2) / 2;      // ceil((D+1)/2)
  const int ny = (degree + 3) / 2;      // ceil((D+2)/2)
  const EdgeQuadRule& gs = edge_quadrature(nx);
  const EdgeQuadRule& gt = edge_quadrature(ny);

  QuadRule r;
  r.exactness = degree;
  r.points.resize(nx * ny, 2);
  r.weights.resize(nx * ny);
  int q = 0;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j, ++q) {
      const double s = gs.points[i], t = gt.points[j];
      r.points(q, 0) = s * (1.0 - t);
      r.points(q, 1) = t;
      // factor 2 normalizes the weights to sum 1 on the reference triangle
      r.weights[q] = 2.0 * gs.weights[i] * gt.weights[j] * (1.0 - t);
    }
  }
  return cache.emplace(degree, std::move(r)).first->second;
}

namespace {

struct ReferenceBasis {
  int p = 0;
  int n = 0;
  std::vector<std::array<int, 2>> exponents;            // monomial powers
  Eigen::Matrix<double, Eigen::Dynamic, 2> nodes;       // local node layout
  Eigen::MatrixXd coeffs;  // column k: monomial coefficients of basis k
};

/// Local node order: 3 vertices, then p-1 equispaced nodes per edge
/// (edge e opposite vertex e, walked from vertex (e+1)%3), then interior
/// lattice nodes.
ReferenceBasis make_reference_basis(int p) {
  ReferenceBasis rb;
  rb.p = p;
  rb.n = (p + 1) * (p + 2) / 2;

  const Vec2 ref[3] = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  std::vector<Vec2> nodes;
  for (int v = 0; v < 3; ++v) nodes.emplace_back(ref[v]);
  for (int e = 0; e < 3; ++e) {
    const Vec2 a = ref[(e + 1) % 3], b = ref[(e + 2) % 3];
    for (int j = 1; j < p; ++j) {
      nodes.emplace_back(a + (static_cast<double>(j) / p) * (b - a));
    }
  }
  for (int iy = 1; iy < p; ++iy) {
    for (int ix = 1; ix + iy <= p - 1; ++ix) {
      nodes.emplace_back(static_cast<double>(ix) / p,
                         static_cast<double>(iy) / p);
    }
  }
  rb.nodes.resize(rb.n, 2);
  for (int i = 0; i < rb.n; ++i) rb.nodes.row(i) = nodes[i].transpose();

  for (int d = 0; d <= p; ++d) {
    for (int i = d; i >= 0; --i) rb.exponents.push_back({i, d - i});
  }

  Eigen::MatrixXd V(rb.n, rb.n);
  for (int k = 0; k < rb.n; ++k) {
    for (int m = 0; m < rb.n; ++m) {
      V(k, m) = std::pow(rb.nodes(k, 0), rb.exponents[m][0]) *
                std::pow(rb.nodes(k, 1), rb.exponents[m][1]);
    }
  }
  rb.coeffs = V.fullPivLu().inverse();
  return rb;
}

const ReferenceBasis& reference_basis(int p) {
  static std::map<int, ReferenceBasis> cache;
  auto it = cache.find(p);
  if (it != cache.end()) return it->second;
  return cache.emplace(p, make_reference_basis(p)).first->second;
}

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

}  // namespace

FESpace::FESpace(std::shared_ptr<const Triangulation> mesh, int p)
    : mesh_(std::move(mesh)), p_(p) {
  if (p < 1 || p > 4) {
    throw Error("build_space: unsupported polynomial degree " +
                std::to_string(p) + " (supported: 1..4)");
  }
  n_local_ = (p + 1) * (p + 2) / 2;
  const Triangulation& T = *mesh_;
  const int nv = T.n_vertices();
  const int ne = static_cast<int>(T.edges().size());
  const int nt = T.n_triangles();
  const int n_edge = p - 1;
  const int n_int = (p - 1) * (p - 2) / 2;
  const int total = nv + ne * n_edge + nt * n_int;

  dof_coords_.resize(total);
  for (int v = 0; v < nv; ++v) dof_coords_[v] = T.vertex(v);
  for (int e = 0; e < ne; ++e) {
    const Vec2 a = T.vertex(T.edges()[e][0]);
    const Vec2 b = T.vertex(T.edges()[e][1]);
    for (int j = 0; j < n_edge; ++j) {
      const double s = static_cast<double>(j + 1) / p;
      dof_coords_[nv + e * n_edge + j] = (1.0 - s) * a + s * b;
    }
  }

  const ReferenceBasis& rb = reference_basis(p);
  element_dof_map_.assign(nt, std::vector<int>(n_local_));
  for (int t = 0; t < nt; ++t) {
    const Triangle& tri = T.triangle(t);
    std::vector<int>& dofs = element_dof_map_[t];
    for (int v = 0; v < 3; ++v) dofs[v] = tri.v[v];
    int slot = 3;
    for (int e = 0; e < 3; ++e) {
      const int ga = tri.v[(e + 1) % 3];
      const int gb = tri.v[(e + 2) % 3];
      const int ge = T.triangle_edge(t, e);
      for (int j = 0; j < n_edge; ++j, ++slot) {
        // Global edge dofs are parametrized from the lower vertex index.
        const int jj = (ga < gb) ? j : (n_edge - 1 - j);
        dofs[slot] = nv + ge * n_edge + jj;
      }
    }
    if (n_int > 0) {
      const ElementMap em = element_map(t);
      for (int m = 0; m < n_int; ++m, ++slot) {
        const int dof = nv + ne * n_edge + t * n_int + m;
        dofs[slot] = dof;
        const Vec2 ref = rb.nodes.row(3 + 3 * n_edge + m).transpose();
        dof_coords_[dof] = em.origin + em.jacobian * ref;
      }
    }
  }

  free_index_.assign(total, -1);
  for (int v = 0; v < nv; ++v) {
    if (!T.vertex_on_boundary(v)) free_index_[v] = 0;
  }
  for (int e = 0; e < ne; ++e) {
    if (!T.edge_on_boundary(e)) {
      for (int j = 0; j < n_edge; ++j) free_index_[nv + e * n_edge + j] = 0;
    }
  }
  for (int d = nv + ne * n_edge; d < total; ++d) free_index_[d] = 0;

  for (int d = 0; d < total; ++d) {
    if (free_index_[d] == 0) {
      free_index_[d] = static_cast<int>(free_dofs_.size());
      free_dofs_.push_back(d);
    }
  }
}

FESpace::ElementMap FESpace::element_map(int t) const {
  const Triangle& tri = mesh_->triangle(t);
  ElementMap em;
  em.origin = mesh_->vertex(tri.v[0]);
  em.jacobian.col(0) = mesh_->vertex(tri.v[1]) - em.origin;
  em.jacobian.col(1) = mesh_->vertex(tri.v[2]) - em.origin;
  em.det = em.jacobian.determinant();
  em.inv_jacobian = em.jacobian.inverse();
  return em;
}

Eigen::MatrixXd FESpace::basis_values(
    const Eigen::Matrix<double, Eigen::Dynamic, 2>& ref_points) const {
  const ReferenceBasis& rb = reference_basis(p_);
  const Eigen::Index np = ref_points.rows();
  Eigen::MatrixXd mono(np, rb.n);
  for (Eigen::Index q = 0; q < np; ++q) {
    for (int m = 0; m < rb.n; ++m) {
      mono(q, m) = ipow(ref_points(q, 0), rb.exponents[m][0]) *
                   ipow(ref_points(q, 1), rb.exponents[m][1]);
    }
  }
  return mono * rb.coeffs;
}

Eigen::MatrixXd FESpace::basis_ref_gradients(
    const Eigen::Matrix<double, Eigen::Dynamic, 2>& ref_points) const {
  const ReferenceBasis& rb = reference_basis(p_);
  const Eigen::Index np = ref_points.rows();
  Eigen::MatrixXd grads(np * rb.n, 2);
  Eigen::MatrixXd dmono(rb.n, 2);
  for (Eigen::Index q = 0; q < np; ++q) {
    const double x = ref_points(q, 0), y = ref_points(q, 1);
    for (int m = 0; m < rb.n; ++m) {
      const int i = rb.exponents[m][0], j = rb.exponents[m][1];
      dmono(m, 0) = (i > 0) ? i * ipow(x, i - 1) * ipow(y, j) : 0.0;
      dmono(m, 1) = (j > 0) ? j * ipow(x, i) * ipow(y, j - 1) : 0.0;
    }
    grads.middleRows(q * rb.n, rb.n) = rb.coeffs.transpose() * dmono;
  }
  return grads;
}

Eigen::MatrixXd FESpace::basis_ref_hessians(
    const Eigen::Matrix<double, Eigen::Dynamic, 2>& ref_points) const {
  const ReferenceBasis& rb = reference_basis(p_);
  const Eigen::Index np = ref_points.rows();
  Eigen::MatrixXd hess(np * rb.n, 3);
  Eigen::MatrixXd dd(rb.n, 3);
  for (Eigen::Index q = 0; q < np; ++q) {
    const double x = ref_points(q, 0), y = ref_points(q, 1);
    for (int m = 0; m < rb.n; ++m) {
      const int i = rb.exponents[m][0], j = rb.exponents[m][1];
      dd(m, 0) = (i > 1) ? i * (i - 1) * ipow(x, i - 2) * ipow(y, j) : 0.0;
      dd(m, 1) = (i > 0 && j > 0) ? i * j * ipow(x, i - 1) * ipow(y, j - 1)
                                  : 0.0;
      dd(m, 2) = (j > 1) ? j * (j - 1) * ipow(x, i) * ipow(y, j - 2) : 0.0;
    }
    hess.middleRows(q * rb.n, rb.n) = rb.coeffs.transpose() * dd;
  }
  return hess;
}

Eigen::VectorXd FESpace::local_coefficients(const CoefVec& v, int t) const {
  const std::vector<int>& dofs = element_dof_map_[t];
  Eigen::VectorXd lc(n_local_);
  for (int l = 0; l < n_local_; ++l) {
    const int fi = free_index_[dofs[l]];
    lc[l] = (fi >= 0) ? v[fi] : 0.0;
  }
  return lc;
}

std::shared_ptr<const FESpace> build_space(
    std::shared_ptr<const Triangulation> mesh, int p) {
  return std::make_shared<FESpace>(std::move(mesh), p);
}

Evaluation evaluate(const FESpace& space, const CoefVec& v, int t,
                    const Eigen::Matrix<double, Eigen::Dynamic, 2>& ref_points) {
  if (v.size() != space.n_free_dofs()) {
    throw Error("evaluate: coefficient vector has wrong length");
  }
  const Eigen::VectorXd lc = space.local_coefficients(v, t);
  const Eigen::MatrixXd B = space.basis_values(ref_points);
  const Eigen::MatrixXd G = space.basis_ref_gradients(ref_points);
  const FESpace::ElementMap em = space.element_map(t);
  const Mat2 invJt = em.inv_jacobian.transpose();

  Evaluation ev;
  ev.values = B * lc;
  ev.gradients.resize(ref_points.rows(), 2);
  const int nl = space.n_local();
  for (Eigen::Index q = 0; q < ref_points.rows(); ++q) {
    const Vec2 ref_grad = G.middleRows(q * nl, nl).transpose() * lc;
    ev.gradients.row(q) = (invJt * ref_grad).transpose();
  }
  return ev;
}

namespace {

bool same_mesh(const Triangulation& a, const Triangulation& b) {
  if (&a == &b) return true;
  if (a.n_vertices() != b.n_vertices() || a.n_triangles() != b.n_triangles()) {
    return false;
  }
  for (int v = 0; v < a.n_vertices(); ++v) {
    if (a.vertex(v) != b.vertex(v)) return false;
  }
  for (int t = 0; t < a.n_triangles(); ++t) {
    if (a.triangle(t).v != b.triangle(t).v) return false;
  }
  return true;
}

}  // namespace

CoefVec prolongate(const FESpace& coarse, const FESpace& fine,
                   const CoefVec& v) {
  if (v.size() != coarse.n_free_dofs()) {
    throw Error("prolongate: coefficient vector has wrong length");
  }
  if (coarse.order() != fine.order()) {
    throw Error("prolongate: spaces have different polynomial degree");
  }
  if (same_mesh(coarse.mesh(), fine.mesh())) return v;

  const Triangulation& fm = fine.mesh();
  const Triangulation& cm = coarse.mesh();
  CoefVec out = CoefVec::Zero(fine.n_free_dofs());
  std::vector<std::uint8_t> done(fine.n_free_dofs(), 0);

  const int nl = fine.n_local();
  Eigen::Matrix<double, Eigen::Dynamic, 2> coarse_ref(nl, 2);
  for (int ft = 0; ft < fm.n_triangles(); ++ft) {
    const int ct = fm.triangle(ft).parent;
    if (ct < 0 || ct >= cm.n_triangles()) {
      throw Error("prolongate: fine mesh is not a refinement of the coarse "
                  "mesh (missing parent links)");
    }
    const FESpace::ElementMap cem = coarse.element_map(ct);
    const std::vector<int>& dofs = fine.element_dofs(ft);

    bool any = false;
    for (int l = 0; l < nl; ++l) {
      const int fi = fine.free_index(dofs[l]);
      if (fi < 0 || done[fi]) continue;
      any = true;
    }
    if (!any) continue;

    for (int l = 0; l < nl; ++l) {
      const Vec2 x = fine.dof_coords()[dofs[l]];
      const Vec2 ref = cem.inv_jacobian * (x - cem.origin);
      if (ref.minCoeff() < -1e-9 || ref.sum() > 1.0 + 1e-9) {
        throw Error("prolongate: meshes are not nested");
      }
      coarse_ref.row(l) = ref.transpose();
    }
    const Eigen::VectorXd vals =
        coarse.basis_values(coarse_ref) * coarse.local_coefficients(v, ct);
    for (int l = 0; l < nl; ++l) {
      const int fi = fine.free_index(dofs[l]);
      if (fi < 0 || done[fi]) continue;
      out[fi] = vals[l];
      done[fi] = 1;
    }
  }
  return out;
}

}  // namespace nailfem
