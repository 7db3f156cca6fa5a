#pragma once

#include <memory>
#include <vector>

#include "nailfem/mesh.hpp"
#include "nailfem/types.hpp"

namespace nailfem {

/// Quadrature rule on the reference triangle conv{(0,0),(1,0),(0,1)},
/// stored as reference coordinates with weights normalized to sum 1, so
/// that  int_T f = |T| * sum_i w_i f(F_T(x_i)).
struct QuadRule {
  Eigen::Matrix<double, Eigen::Dynamic, 2> points;
  Eigen::VectorXd weights;
  int exactness = 0;
};

/// Returns a cached rule exact for polynomials of total degree <= degree
/// (collapsed tensor Gauss on the triangle; all weights positive).
const QuadRule& tri_quadrature(int degree);

/// Gauss-Legendre points/weights on [0,1], exact for degree 2n-1.
struct EdgeQuadRule {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;
};
const EdgeQuadRule& edge_quadrature(int n_points);

/// Conforming Lagrange space S^p_0 on a triangulation: standard nodes
/// (vertices, p-1 equispaced nodes per edge, interior nodes for p >= 3),
/// with Dirichlet dofs eliminated. Immutable after construction.
class FESpace {
 public:
  FESpace(std::shared_ptr<const Triangulation> mesh, int p);

  const Triangulation& mesh() const { return *mesh_; }
  std::shared_ptr<const Triangulation> mesh_ptr() const { return mesh_; }
  int order() const { return p_; }
  int n_local() const { return n_local_; }

  int n_dofs() const { return static_cast<int>(dof_coords_.size()); }
  int n_free_dofs() const { return static_cast<int>(free_dofs_.size()); }
  const std::vector<Vec2>& dof_coords() const { return dof_coords_; }
  const std::vector<int>& free_dofs() const { return free_dofs_; }
  /// Free-dof index of a global dof, or -1 for boundary dofs.
  int free_index(int dof) const { return free_index_[dof]; }
  /// Global dofs of element t in local node order.
  const std::vector<int>& element_dofs(int t) const {
    return element_dof_map_[t];
  }

  /// Local basis values at reference points: (#points x n_local).
  Eigen::MatrixXd basis_values(
      const Eigen::Matrix<double, Eigen::Dynamic, 2>& ref_points) const;
  /// Reference-coordinate gradients, per point an (n_local x 2) block
  /// stacked vertically.
  Eigen::MatrixXd basis_ref_gradients(
      const Eigen::Matrix<double, Eigen::Dynamic, 2>& ref_points) const;
  /// Reference-coordinate second derivatives (dxx, dxy, dyy) as
  /// (n_local x 3) blocks stacked per point.
  Eigen::MatrixXd basis_ref_hessians(
      const Eigen::Matrix<double, Eigen::Dynamic, 2>& ref_points) const;

  /// Affine map data of element t.
  struct ElementMap {
    Vec2 origin;
    Mat2 jacobian;      // columns are the edge vectors from vertex 0
    Mat2 inv_jacobian;  // maps physical offsets to reference coordinates
    double det = 0.0;   // 2 * area
  };
  ElementMap element_map(int t) const;

  /// Local coefficients of v on element t (boundary dofs contribute 0).
  Eigen::VectorXd local_coefficients(const CoefVec& v, int t) const;

 private:
  std::shared_ptr<const Triangulation> mesh_;
  int p_;
  int n_local_;
  std::vector<Vec2> dof_coords_;
  std::vector<int> free_dofs_;
  std::vector<int> free_index_;
  std::vector<std::vector<int>> element_dof_map_;
};

/// Builds S^p_0(mesh) for p in {1,2,3,4}.
std::shared_ptr<const FESpace> build_space(
    std::shared_ptr<const Triangulation> mesh, int p);

/// Values and physical gradients of the function with coefficients v on
/// element t at the given reference points.
struct Evaluation {
  Eigen::VectorXd values;
  Eigen::Matrix<double, Eigen::Dynamic, 2> gradients;
};
Evaluation evaluate(const FESpace& space, const CoefVec& v, int t,
                    const Eigen::Matrix<double, Eigen::Dynamic, 2>& ref_points);

/// Transfers a coarse-space function to a fine space obtained by newest-
/// vertex bisection of the coarse mesh (possibly zero steps). The
/// represented function is unchanged. Throws if the meshes are not nested.
CoefVec prolongate(const FESpace& coarse, const FESpace& fine,
                   const CoefVec& v);

}  // namespace nailfem
