#include "nailfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace nailfem {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double signed_area2(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
  return (p1.x() - p0.x()) * (p2.y() - p0.y()) -
         (p1.y() - p0.y()) * (p2.x() - p0.x());
}

/// Longest edge, ties broken by the lowest opposite-vertex global index.
int longest_edge_opposite(const std::vector<Vec2>& verts,
                          const std::array<int, 3>& v) {
  int best = -1;
  double best_len = -1.0;
  for (int e = 0; e < 3; ++e) {
    const Vec2 a = verts[v[(e + 1) % 3]];
    const Vec2 b = verts[v[(e + 2) % 3]];
    const double len = (b - a).norm();
    if (len > best_len + 1e-14 * (1.0 + best_len) ||
        (std::abs(len - best_len) <= 1e-14 * (1.0 + best_len) &&
         v[e] < v[best])) {
      best = e;
      best_len = std::max(len, best_len);
    }
  }
  return best;
}

}  // namespace

MarkedSet::MarkedSet(std::vector<int> indices, int n_triangles)
    : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  indices_.erase(std::unique(indices_.begin(), indices_.end()),
                 indices_.end());
  for (int t : indices_) {
    if (t < 0 || t >= n_triangles) {
      throw Error("MarkedSet: triangle index " + std::to_string(t) +
                  " out of range [0, " + std::to_string(n_triangles) + ")");
    }
  }
}

Triangulation::Triangulation(std::vector<Vec2> vertices,
                             std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const int nt = n_triangles();
  const int nv = n_vertices();
  if (nt == 0) throw Error("Triangulation: no triangles");

  for (int t = 0; t < nt; ++t) {
    Triangle& tri = triangles_[t];
    for (int i = 0; i < 3; ++i) {
      if (tri.v[i] < 0 || tri.v[i] >= nv) {
        throw Error("Triangulation: triangle " + std::to_string(t) +
                    " has vertex index out of range");
      }
    }
    if (tri.ref_opp < 0 || tri.ref_opp > 2) {
      throw Error("Triangulation: triangle " + std::to_string(t) +
                  " has refinement-edge tag outside {0,1,2}");
    }
    if (signed_area2(vertices_[tri.v[0]], vertices_[tri.v[1]],
                     vertices_[tri.v[2]]) <= 0.0) {
      throw Error("Triangulation: triangle " + std::to_string(t) +
                  " is degenerate or negatively oriented");
    }
    if (tri.root < 0) tri.root = t;
  }

  // Unique edges in lexicographic order.
  std::vector<std::array<int, 2>> all;
  all.reserve(3 * nt);
  for (const Triangle& tri : triangles_) {
    for (int e = 0; e < 3; ++e) {
      int a = tri.v[(e + 1) % 3], b = tri.v[(e + 2) % 3];
      if (a > b) std::swap(a, b);
      all.push_back({a, b});
    }
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  edges_ = std::move(all);

  std::unordered_map<std::uint64_t, int> edge_index;
  edge_index.reserve(edges_.size() * 2);
  for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
    edge_index[edge_key(edges_[e][0], edges_[e][1])] = e;
  }

  tri_edges_.assign(nt, {-1, -1, -1});
  neighbors_.assign(nt, {-1, -1, -1});
  // Up to two (triangle, local edge) incidences per edge.
  std::vector<std::array<int, 2>> inc_tri(edges_.size(), {-1, -1});
  std::vector<std::array<int, 2>> inc_loc(edges_.size(), {-1, -1});
  for (int t = 0; t < nt; ++t) {
    for (int e = 0; e < 3; ++e) {
      const int a = triangles_[t].v[(e + 1) % 3];
      const int b = triangles_[t].v[(e + 2) % 3];
      const int ge = edge_index.at(edge_key(a, b));
      tri_edges_[t][e] = ge;
      if (inc_tri[ge][0] < 0) {
        inc_tri[ge] = {t, -1};
        inc_loc[ge] = {e, -1};
      } else if (inc_tri[ge][1] < 0) {
        inc_tri[ge][1] = t;
        inc_loc[ge][1] = e;
      } else {
        throw Error("Triangulation: edge (" + std::to_string(a) + "," +
                    std::to_string(b) + ") shared by more than 2 triangles");
      }
    }
  }
  for (std::size_t ge = 0; ge < edges_.size(); ++ge) {
    if (inc_tri[ge][1] >= 0) {
      neighbors_[inc_tri[ge][0]][inc_loc[ge][0]] = inc_tri[ge][1];
      neighbors_[inc_tri[ge][1]][inc_loc[ge][1]] = inc_tri[ge][0];
    }
  }

  edge_boundary_.assign(edges_.size(), 0);
  boundary_vertex_.assign(nv, 0);
  for (std::size_t ge = 0; ge < edges_.size(); ++ge) {
    if (inc_tri[ge][1] < 0) {
      edge_boundary_[ge] = 1;
      boundary_edges_.push_back(edges_[ge]);
      boundary_vertex_[edges_[ge][0]] = 1;
      boundary_vertex_[edges_[ge][1]] = 1;
    }
  }
}

double Triangulation::area(int t) const {
  const Triangle& tri = triangles_[t];
  return 0.5 * signed_area2(vertices_[tri.v[0]], vertices_[tri.v[1]],
                            vertices_[tri.v[2]]);
}

ElementGeometry Triangulation::element_geometry(int t) const {
  const Triangle& tri = triangles_[t];
  ElementGeometry g;
  g.area = area(t);
  for (int e = 0; e < 3; ++e) {
    const Vec2 a = vertices_[tri.v[(e + 1) % 3]];
    const Vec2 b = vertices_[tri.v[(e + 2) % 3]];
    const Vec2 d = b - a;
    const double len = d.norm();
    g.edges[e].length = len;
    // Vertices are ordered counterclockwise, so the interior lies left of
    // a->b and the outward normal is the right-hand rotation.
    g.edges[e].normal = Vec2(d.y(), -d.x()) / len;
    g.edges[e].neighbor = neighbors_[t][e];
    g.h = std::max(g.h, len);
  }
  return g;
}

void Triangulation::validate(bool geometric_hanging_node_scan) const {
  // Construction already guarantees orientation, index ranges, and edge
  // adjacency counts in {1,2}. What remains is the geometric conformity
  // check: no vertex in the interior of another triangle's edge.
  if (!geometric_hanging_node_scan) return;
  for (const auto& e : edges_) {
    const Vec2 a = vertices_[e[0]];
    const Vec2 b = vertices_[e[1]];
    const double len = (b - a).norm();
    for (int v = 0; v < n_vertices(); ++v) {
      if (v == e[0] || v == e[1]) continue;
      const Vec2 p = vertices_[v];
      const double cross = signed_area2(a, b, p);
      if (std::abs(cross) > 1e-12 * len) continue;
      const double s = (p - a).dot(b - a) / (len * len);
      if (s > 1e-12 && s < 1.0 - 1e-12) {
        throw Error("Triangulation: vertex " + std::to_string(v) +
                    " hangs on edge (" + std::to_string(e[0]) + "," +
                    std::to_string(e[1]) + ")");
      }
    }
  }
}

void Triangulation::write(std::ostream& os) const {
  os << std::setprecision(17);
  os << "vertices " << n_vertices() << "\n";
  for (const Vec2& v : vertices_) os << v.x() << " " << v.y() << "\n";
  os << "triangles " << n_triangles() << "\n";
  for (const Triangle& t : triangles_) {
    os << t.v[0] << " " << t.v[1] << " " << t.v[2] << " " << t.ref_opp << "\n";
  }
  os << "boundary " << boundary_edges_.size() << "\n";
  for (const auto& e : boundary_edges_) os << e[0] << " " << e[1] << "\n";
}

namespace {

std::shared_ptr<const Triangulation> build_initial(
    std::vector<Vec2> verts, std::vector<std::array<int, 3>> tris) {
  std::vector<Triangle> triangles(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    triangles[t].v = tris[t];
    triangles[t].ref_opp = longest_edge_opposite(verts, tris[t]);
    triangles[t].root = static_cast<int>(t);
  }
  auto mesh = std::make_shared<Triangulation>(std::move(verts),
                                              std::move(triangles));
  mesh->validate();
  return mesh;
}

std::shared_ptr<const Triangulation> make_l_shape() {
  // (-1,1)^2 minus the closed upper-right quadrant, split into six
  // 0.5 x 1 cells with diagonals running toward the reentrant corner.
  std::vector<Vec2> verts = {
      {-1, -1}, {-0.5, -1}, {0, -1}, {0.5, -1}, {1, -1},
      {-1, 0},  {-0.5, 0},  {0, 0},  {0.5, 0},  {1, 0},
      {-1, 1},  {-0.5, 1},  {0, 1},
  };
  std::vector<std::array<int, 3>> tris = {
      {0, 1, 6},  {0, 6, 5},    // [-1,-0.5] x [-1,0]
      {1, 2, 7},  {1, 7, 6},    // [-0.5,0] x [-1,0]
      {2, 3, 7},  {3, 8, 7},    // [0,0.5]  x [-1,0]
      {3, 4, 8},  {4, 9, 8},    // [0.5,1]  x [-1,0]
      {5, 6, 10}, {6, 11, 10},  // [-1,-0.5] x [0,1]
      {6, 7, 11}, {7, 12, 11},  // [-0.5,0] x [0,1]
  };
  return build_initial(std::move(verts), std::move(tris));
}

std::shared_ptr<const Triangulation> make_unit_square() {
  std::vector<Vec2> verts = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  std::vector<std::array<int, 3>> tris = {{0, 1, 2}, {0, 2, 3}};
  return build_initial(std::move(verts), std::move(tris));
}

}  // namespace

std::shared_ptr<const Triangulation> read_mesh(std::istream& is,
                                               const std::string& name) {
  auto fail = [&name](const std::string& msg) -> void {
    throw Error("mesh file '" + name + "': " + msg);
  };

  std::string kw;
  int nv = 0;
  if (!(is >> kw >> nv) || kw != "vertices" || nv <= 0) {
    fail("expected 'vertices N' header");
  }
  std::vector<Vec2> verts(nv);
  for (int i = 0; i < nv; ++i) {
    if (!(is >> verts[i].x() >> verts[i].y())) {
      fail("malformed vertex line " + std::to_string(i));
    }
  }
  int nt = 0;
  if (!(is >> kw >> nt) || kw != "triangles" || nt <= 0) {
    fail("expected 'triangles M' section");
  }
  std::vector<Triangle> tris(nt);
  for (int t = 0; t < nt; ++t) {
    int r = -1;
    if (!(is >> tris[t].v[0] >> tris[t].v[1] >> tris[t].v[2] >> r)) {
      fail("malformed triangle line " + std::to_string(t));
    }
    tris[t].ref_opp = r;
    tris[t].root = t;
  }
  std::vector<std::array<int, 2>> declared_boundary;
  if (is >> kw) {
    int nb = 0;
    if (kw != "boundary" || !(is >> nb) || nb < 0) {
      fail("expected optional 'boundary B' section, got '" + kw + "'");
    }
    for (int i = 0; i < nb; ++i) {
      int a = 0, b = 0;
      if (!(is >> a >> b)) fail("malformed boundary line " + std::to_string(i));
      if (a > b) std::swap(a, b);
      declared_boundary.push_back({a, b});
    }
  }

  std::shared_ptr<Triangulation> mesh;
  try {
    mesh = std::make_shared<Triangulation>(std::move(verts), std::move(tris));
    mesh->validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  if (!declared_boundary.empty()) {
    std::sort(declared_boundary.begin(), declared_boundary.end());
    if (declared_boundary != mesh->boundary_edges()) {
      fail("declared boundary does not match edge adjacency");
    }
  }
  return mesh;
}

std::shared_ptr<const Triangulation> initial_mesh(
    const std::string& domain_tag) {
  if (domain_tag == "l_shape") return make_l_shape();
  if (domain_tag == "unit_square") return make_unit_square();
  std::ifstream f(domain_tag);
  if (!f) throw Error("mesh file '" + domain_tag + "': cannot open");
  return read_mesh(f, domain_tag);
}

namespace {

/// Scratch mesh for one refine() call. Triangles are append-only; a split
/// kills the parent and appends two children.
class RefineWorkspace {
 public:
  explicit RefineWorkspace(const Triangulation& mesh) : mesh_(mesh) {
    verts_ = mesh.vertices();
    const int nt = mesh.n_triangles();
    tris_.reserve(4 * nt);
    for (int t = 0; t < nt; ++t) {
      const Triangle& tri = mesh.triangle(t);
      tris_.push_back({tri.v, tri.ref_opp, tri.generation, t, tri.root, true});
      for (int e = 0; e < 3; ++e) adj_add(edge_of(t, e), t);
    }
    in_progress_.assign(tris_.size(), 0);
  }

  void bisect_marked(int t) {
    if (tris_[t].alive) bisect_once(t);
  }

  std::shared_ptr<const Triangulation> finish() {
    std::vector<Triangle> out;
    out.reserve(tris_.size());
    for (const WTri& w : tris_) {
      if (!w.alive) continue;
      Triangle t;
      t.v = w.v;
      t.ref_opp = w.ref_opp;
      t.generation = w.gen;
      t.parent = w.parent;
      t.root = w.root;
      out.push_back(t);
    }
    return std::make_shared<Triangulation>(std::move(verts_), std::move(out));
  }

 private:
  struct WTri {
    std::array<int, 3> v;
    int ref_opp;
    int gen;
    int parent;  // ancestor in the input mesh
    int root;
    bool alive;
  };

  std::uint64_t edge_of(int t, int e) const {
    return edge_key(tris_[t].v[(e + 1) % 3], tris_[t].v[(e + 2) % 3]);
  }
  std::uint64_t refinement_edge(int t) const {
    return edge_of(t, tris_[t].ref_opp);
  }

  void adj_add(std::uint64_t key, int t) {
    auto& slot =
        adj_.try_emplace(key, std::array<int, 2>{-1, -1}).first->second;
    if (slot[0] < 0) {
      slot[0] = t;
    } else {
      slot[1] = t;
    }
  }
  void adj_remove(std::uint64_t key, int t) {
    auto it = adj_.find(key);
    if (it->second[0] == t) it->second[0] = it->second[1];
    it->second[1] = -1;
    if (it->second[0] < 0) adj_.erase(it);
  }
  int adj_other(std::uint64_t key, int t) const {
    auto it = adj_.find(key);
    if (it == adj_.end()) return -1;
    return it->second[0] == t ? it->second[1] : it->second[0];
  }

  /// Bisects t exactly once; recursively makes the neighbor across the
  /// refinement edge compatible first. Cycles of mutually incompatible
  /// generation-0 triangles are broken by splitting immediately; the
  /// resulting hanging midpoint is picked up by resolve_hanging once the
  /// in-progress neighbor is split.
  void bisect_once(int t) {
    for (;;) {
      const std::uint64_t e = refinement_edge(t);
      auto mid = midpoints_.find(e);
      if (mid != midpoints_.end()) {
        split(t, mid->second);
        return;
      }
      const int n = adj_other(e, t);
      if (n < 0 || refinement_edge(n) == e) {
        const int m = new_midpoint(e);
        split(t, m);
        if (n >= 0) split(n, m);
        return;
      }
      if (in_progress_[n]) {
        split(t, new_midpoint(e));
        return;
      }
      in_progress_[t] = 1;
      bisect_once(n);
      in_progress_[t] = 0;
      if (!tris_[t].alive) return;  // a closure cycle already split t
      // The triangle now across e is a child of n with refinement edge e;
      // the next loop iteration takes the compatible branch.
    }
  }

  int new_midpoint(std::uint64_t key) {
    const int a = static_cast<int>(key >> 32);
    const int b = static_cast<int>(key & 0xffffffffu);
    const int m = static_cast<int>(verts_.size());
    verts_.push_back(0.5 * (verts_[a] + verts_[b]));
    midpoints_.emplace(key, m);
    return m;
  }

  /// Bisects t across its refinement edge using existing midpoint m. The
  /// children inherit the two remaining parent edges as refinement edges;
  /// if such an edge was already bisected from the other side, the child is
  /// split immediately to restore conformity.
  void split(int t, int m) {
    const WTri w = tris_[t];
    const int c = w.v[w.ref_opp];
    const int a = w.v[(w.ref_opp + 1) % 3];
    const int b = w.v[(w.ref_opp + 2) % 3];

    tris_[t].alive = false;
    adj_remove(edge_key(a, b), t);
    adj_remove(edge_key(b, c), t);
    adj_remove(edge_key(c, a), t);

    const int child1 = append_child({c, a, m}, w);
    const int child2 = append_child({b, c, m}, w);
    resolve_hanging(child1);
    resolve_hanging(child2);
  }

  int append_child(std::array<int, 3> v, const WTri& parent) {
    const int id = static_cast<int>(tris_.size());
    tris_.push_back({v, /*ref_opp=*/2, parent.gen + 1, parent.parent,
                     parent.root, true});
    in_progress_.push_back(0);
    for (int e = 0; e < 3; ++e) adj_add(edge_of(id, e), id);
    return id;
  }

  void resolve_hanging(int t) {
    auto mid = midpoints_.find(refinement_edge(t));
    if (mid != midpoints_.end()) split(t, mid->second);
  }

  const Triangulation& mesh_;
  std::vector<Vec2> verts_;
  std::vector<WTri> tris_;
  std::unordered_map<std::uint64_t, std::array<int, 2>> adj_{};
  std::unordered_map<std::uint64_t, int> midpoints_;
  std::vector<std::uint8_t> in_progress_;
};

}  // namespace

std::shared_ptr<const Triangulation> refine(const Triangulation& mesh,
                                            const MarkedSet& marked) {
  for (int t : marked.indices()) {
    if (t >= mesh.n_triangles()) {
      throw Error("refine: marked set does not belong to this mesh");
    }
  }
  if (marked.empty()) {
    std::vector<Triangle> tris = mesh.triangles();
    for (int t = 0; t < mesh.n_triangles(); ++t) tris[t].parent = t;
    return std::make_shared<Triangulation>(mesh.vertices(), std::move(tris));
  }
  RefineWorkspace ws(mesh);
  for (int t : marked.indices()) ws.bisect_marked(t);
  return ws.finish();
}

std::shared_ptr<const Triangulation> uniform_refine(const Triangulation& mesh) {
  std::vector<int> all(mesh.n_triangles());
  for (int t = 0; t < mesh.n_triangles(); ++t) all[t] = t;
  return refine(mesh, MarkedSet(std::move(all), mesh.n_triangles()));
}

}  // namespace nailfem
