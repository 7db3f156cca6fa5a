#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nailfem/types.hpp"

namespace nailfem {

/// A triangle of the mesh. `v` are vertex indices in positive orientation,
/// `ref_opp` is the local index of the vertex opposite the refinement edge,
/// so the refinement edge is (v[(ref_opp+1)%3], v[(ref_opp+2)%3]).
struct Triangle {
  std::array<int, 3> v;
  int ref_opp = 2;
  int generation = 0;
  int parent = -1;  // index into the previous mesh, -1 on an initial mesh
  int root = -1;    // index of the ancestor in the initial mesh
};

/// Set of triangle indices into a specific Triangulation (marked elements).
class MarkedSet {
 public:
  MarkedSet() = default;
  MarkedSet(std::vector<int> indices, int n_triangles);

  const std::vector<int>& indices() const { return indices_; }
  bool empty() const { return indices_.empty(); }
  std::size_t size() const { return indices_.size(); }

 private:
  std::vector<int> indices_;  // sorted, unique, all in [0, n_triangles)
};

/// Per-element geometry used by assembly and the error estimator.
struct ElementGeometry {
  double h = 0.0;     // longest edge length
  double area = 0.0;  // > 0 for positively oriented triangles
  struct Edge {
    double length = 0.0;
    Vec2 normal = Vec2::Zero();  // outward unit normal
    int neighbor = -1;           // adjacent triangle, -1 on the boundary
  };
  std::array<Edge, 3> edges;  // local edge e is opposite local vertex e
};

/// Conforming triangulation of a polygonal domain, immutable after
/// construction. Refinement is newest-vertex bisection: `refine` is a pure
/// function returning a new mesh.
class Triangulation {
 public:
  Triangulation(std::vector<Vec2> vertices, std::vector<Triangle> triangles);

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_triangles() const { return static_cast<int>(triangles_.size()); }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const Triangle& triangle(int t) const { return triangles_[t]; }
  Vec2 vertex(int v) const { return vertices_[v]; }

  /// Edges as sorted vertex pairs, lexicographically ordered.
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  /// Global edge index of local edge e of triangle t.
  int triangle_edge(int t, int e) const { return tri_edges_[t][e]; }
  /// Triangle adjacent to t across its local edge e, or -1 on the boundary.
  int neighbor(int t, int e) const { return neighbors_[t][e]; }

  const std::vector<std::array<int, 2>>& boundary_edges() const {
    return boundary_edges_;
  }
  bool vertex_on_boundary(int v) const { return boundary_vertex_[v] != 0; }
  bool edge_on_boundary(int edge_index) const {
    return edge_boundary_[edge_index] != 0;
  }

  ElementGeometry element_geometry(int t) const;
  double area(int t) const;

  /// Full consistency check: positive areas, edge adjacency counts in {1,2},
  /// and (geometric) absence of hanging nodes. Throws Error on violation.
  /// The hanging-node scan is O(#edges * #vertices); intended for input
  /// validation and tests, not for per-level use on large meshes.
  void validate(bool geometric_hanging_node_scan = true) const;

  /// Writes the plain-text mesh format (see read_mesh).
  void write(std::ostream& os) const;

 private:
  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> tri_edges_;
  std::vector<std::array<int, 3>> neighbors_;
  std::vector<std::array<int, 2>> boundary_edges_;
  std::vector<std::uint8_t> boundary_vertex_;
  std::vector<std::uint8_t> edge_boundary_;
};

/// Built-in domains and the plain-text mesh file format:
///   vertices N
///   x y                 (N lines)
///   triangles M
///   i j k r             (M lines, r in {0,1,2}: refinement edge opposite
///                        vertex r)
///   boundary B          (optional; otherwise inferred from adjacency)
///   a b                 (B lines)
/// `domain_tag` is "l_shape", "unit_square", or a file path.
std::shared_ptr<const Triangulation> initial_mesh(const std::string& domain_tag);

/// Parses the mesh text format from a stream; `name` is used in error
/// messages.
std::shared_ptr<const Triangulation> read_mesh(std::istream& is,
                                               const std::string& name);

/// Newest-vertex bisection: bisects at least every marked triangle and
/// applies conforming closure by recursively bisecting the neighbor across
/// a hanging refinement edge. Returns a new mesh with parent links into
/// `mesh`.
std::shared_ptr<const Triangulation> refine(const Triangulation& mesh,
                                            const MarkedSet& marked);

/// refine(mesh, all elements).
std::shared_ptr<const Triangulation> uniform_refine(const Triangulation& mesh);

}  // namespace nailfem
