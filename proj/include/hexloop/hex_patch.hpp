#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hexloop/error.hpp"
#include "hexloop/graph.hpp"
#include "hexloop/planar.hpp"

namespace hexloop {

/// Axial coordinates of a hexagonal face centred at k + l·e^{iπ/3}; these are
/// also the vertices of the dual triangular lattice.
struct FaceCoord {
  int k = 0;
  int l = 0;
  auto operator<=>(const FaceCoord&) const = default;
  FaceCoord operator+(const FaceCoord& o) const { return {k + o.k, l + o.l}; }
};

/// Counter-clockwise from east.
inline constexpr std::array<FaceCoord, 6> kFaceDirections{
    {{1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}}};

/// UP(k,l) is the bottom corner of face (k,l) and DOWN(k,l) its top corner.
/// UP vertices are the up-pointing triangles of the dual lattice.
struct VertexCoord {
  int k = 0;
  int l = 0;
  bool up = false;
  auto operator<=>(const VertexCoord&) const = default;
};

struct HexEdge {
  int up = -1;                     // vertex ids
  int down = -1;
  int type = 0;                    // 0 up-left, 1 up-right, 2 vertical
  std::array<int, 2> faces{-1, -1};  // patch face ids, -1 when absent
  [[nodiscard]] bool interior() const { return faces[0] >= 0 && faces[1] >= 0; }
  [[nodiscard]] int other(int v) const { return v == up ? down : up; }
};

namespace detail {

inline std::uint64_t pack(int k, int l, int tag) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k)) << 34) ^
         (static_cast<std::uint64_t>(static_cast<std::uint32_t>(l)) << 2) ^ static_cast<std::uint64_t>(tag);
}

inline bool in_ball(FaceCoord f, int r) { return std::abs(f.k + f.l) <= r && std::abs(f.k - f.l) <= r; }

}  // namespace detail

/// Finite union of hexagonal faces with every derived incidence table.
class HexPatch {
 public:
  HexPatch() = default;

  /// B_r = {(k,l) : |k+l| <= r, |k-l| <= r}.
  static HexPatch ball(int r) {
    if (r < 0) throw RangeError("ball radius must be nonnegative");
    std::vector<FaceCoord> faces;
    for (int k = -r; k <= r; ++k)
      for (int l = -r; l <= r; ++l)
        if (detail::in_ball({k, l}, r)) faces.push_back({k, l});
    return HexPatch(std::move(faces));
  }

  static HexPatch from_faces(std::vector<FaceCoord> faces) { return HexPatch(std::move(faces)); }

  explicit HexPatch(std::vector<FaceCoord> faces) : faces_(std::move(faces)) {
    std::sort(faces_.begin(), faces_.end());
    if (std::adjacent_find(faces_.begin(), faces_.end()) != faces_.end())
      throw StructuralError("duplicate face in patch");
    for (int f = 0; f < face_count(); ++f) face_index_.emplace(detail::pack(faces_[f].k, faces_[f].l, 0), f);
    build();
  }

  [[nodiscard]] int face_count() const { return static_cast<int>(faces_.size()); }
  [[nodiscard]] int vertex_count() const { return static_cast<int>(vertices_.size()); }
  [[nodiscard]] int edge_count() const { return static_cast<int>(edges_.size()); }

  [[nodiscard]] const std::vector<FaceCoord>& faces() const& { return faces_; }
  [[nodiscard]] std::vector<FaceCoord> faces() && { return std::move(faces_); }
  [[nodiscard]] FaceCoord face(int f) const { return faces_[f]; }
  [[nodiscard]] int face_id(FaceCoord c) const {
    const auto it = face_index_.find(detail::pack(c.k, c.l, 0));
    return it == face_index_.end() ? -1 : it->second;
  }
  [[nodiscard]] bool has_face(FaceCoord c) const { return face_id(c) >= 0; }

  [[nodiscard]] const VertexCoord& vertex(int v) const { return vertices_[v]; }
  [[nodiscard]] int vertex_id(VertexCoord c) const {
    const auto it = vertex_index_.find(detail::pack(c.k, c.l, c.up ? 1 : 2));
    return it == vertex_index_.end() ? -1 : it->second;
  }
  /// Up to three incident patch faces, -1 for absent ones. UP(K,L) borders
  /// (K,L), (K,L-1), (K+1,L-1); DOWN(K,L) borders (K,L), (K,L+1), (K-1,L+1).
  [[nodiscard]] const std::array<int, 3>& vertex_faces(int v) const { return vertex_faces_[v]; }
  [[nodiscard]] const std::vector<int>& vertex_edges(int v) const { return vertex_edges_[v]; }
  /// A rim vertex has fewer than three faces in the patch.
  [[nodiscard]] bool is_rim(int v) const { return rim_[v] != 0; }

  [[nodiscard]] const HexEdge& edge(int e) const { return edges_[e]; }
  [[nodiscard]] const std::vector<HexEdge>& edges() const { return edges_; }
  [[nodiscard]] int edge_id(VertexCoord up_vertex, int type) const {
    const auto it = edge_index_.find(detail::pack(up_vertex.k, up_vertex.l, type));
    return it == edge_index_.end() ? -1 : it->second;
  }

  /// Corners counter-clockwise from the top, and edge i joining corner i to
  /// corner i+1.
  [[nodiscard]] const std::array<int, 6>& face_vertices(int f) const { return face_vertices_[f]; }
  [[nodiscard]] const std::array<int, 6>& face_edges(int f) const { return face_edges_[f]; }

  /// Edge separating two adjacent face coordinates, -1 if not in the patch.
  [[nodiscard]] int edge_between(FaceCoord a, FaceCoord b) const {
    const auto [up, type] = separating_edge(a, b);
    if (type < 0) return -1;
    return edge_id(up, type);
  }

  /// Arithmetic key of the edge between two adjacent faces; type -1 if the
  /// faces are not adjacent.
  static std::pair<VertexCoord, int> separating_edge(FaceCoord a, FaceCoord b) {
    const int dk = b.k - a.k;
    const int dl = b.l - a.l;
    if (dk == 0 && dl == -1) return {{a.k, a.l, true}, 0};
    if (dk == 1 && dl == -1) return {{a.k, a.l, true}, 1};
    if (dk == 1 && dl == 0) return {{a.k, a.l + 1, true}, 2};
    if (dk == 0 && dl == 1) return {{b.k, b.l, true}, 0};
    if (dk == -1 && dl == 1) return {{b.k, b.l, true}, 1};
    if (dk == -1 && dl == 0) return {{b.k, b.l + 1, true}, 2};
    return {{}, -1};
  }

  /// UP vertices whose three faces all lie in the patch (the T↑ sites), in
  /// increasing vertex id.
  [[nodiscard]] const std::vector<int>& up_vertices() const { return up_vertices_; }
  /// Position of vertex v in up_vertices(), or -1.
  [[nodiscard]] int up_index(int v) const { return up_index_[v]; }

  /// Triangular lattice on the faces (dual adjacency).
  [[nodiscard]] Graph triangular_graph() const {
    Graph g(face_count());
    for (int f = 0; f < face_count(); ++f)
      for (const auto& d : kFaceDirections) {
        const int h = face_id(faces_[f] + d);
        if (h > f) g.add_edge(f, h);
      }
    return g;
  }

  /// T↑ adjacency: UP vertices at the six lattice offsets, indexed as in
  /// up_vertices().
  [[nodiscard]] Graph up_graph() const {
    Graph g(static_cast<int>(up_vertices_.size()));
    for (int i = 0; i < g.size(); ++i) {
      const auto& c = vertices_[up_vertices_[i]];
      for (const auto& d : kFaceDirections) {
        const int w = vertex_id({c.k + d.k, c.l + d.l, true});
        if (w < 0 || up_index_[w] < 0) continue;
        if (up_index_[w] > i) g.add_edge(i, up_index_[w]);
      }
    }
    return g;
  }

  /// Honeycomb graph on vertices and edges.
  [[nodiscard]] Graph hex_graph() const {
    Graph g(vertex_count());
    for (const auto& e : edges_) g.add_edge(e.up, e.down);
    return g;
  }

  static std::array<std::int64_t, 2> face_position(FaceCoord c) {
    return {3 * (2 * static_cast<std::int64_t>(c.k) + c.l), 3 * static_cast<std::int64_t>(c.l)};
  }
  [[nodiscard]] std::array<std::int64_t, 2> vertex_position(int v) const {
    const auto& c = vertices_[v];
    auto p = face_position({c.k, c.l});
    p[1] += c.up ? -2 : 2;
    return p;
  }

  [[nodiscard]] PlanarGraph hex_planar() const {
    std::vector<std::array<std::int64_t, 2>> pos(vertex_count());
    for (int v = 0; v < vertex_count(); ++v) pos[v] = vertex_position(v);
    std::vector<PlanarGraph::Edge> es;
    for (const auto& e : edges_) es.emplace_back(e.up, e.down);
    return PlanarGraph::from_positions(pos, std::move(es));
  }

  [[nodiscard]] PlanarGraph triangular_planar() const {
    std::vector<std::array<std::int64_t, 2>> pos(face_count());
    for (int f = 0; f < face_count(); ++f) pos[f] = face_position(faces_[f]);
    return PlanarGraph::from_positions(pos, triangular_graph().edge_list());
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json faces = nlohmann::json::array();
    for (const auto& f : faces_) faces.push_back({f.k, f.l});
    return {{"faces", faces}};
  }

  static HexPatch from_json(const nlohmann::json& j) {
    std::vector<FaceCoord> faces;
    for (const auto& f : j.at("faces")) faces.push_back({f.at(0).get<int>(), f.at(1).get<int>()});
    return HexPatch(std::move(faces));
  }

 private:
  int intern_vertex(VertexCoord c) {
    const auto key = detail::pack(c.k, c.l, c.up ? 1 : 2);
    const auto [it, inserted] = vertex_index_.emplace(key, vertex_count());
    if (inserted) vertices_.push_back(c);
    return it->second;
  }

  void build() {
    face_vertices_.resize(faces_.size());
    for (int f = 0; f < face_count(); ++f) {
      const auto [k, l] = faces_[f];
      face_vertices_[f] = {intern_vertex({k, l, false}),     intern_vertex({k - 1, l + 1, true}),
                           intern_vertex({k, l - 1, false}), intern_vertex({k, l, true}),
                           intern_vertex({k + 1, l - 1, false}), intern_vertex({k, l + 1, true})};
    }
    // Renumber vertices in coordinate order so ids do not depend on face
    // insertion order.
    std::vector<int> order(vertices_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vertices_[a] < vertices_[b]; });
    std::vector<int> relabel(vertices_.size());
    std::vector<VertexCoord> sorted(vertices_.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      relabel[order[i]] = static_cast<int>(i);
      sorted[i] = vertices_[order[i]];
    }
    vertices_ = std::move(sorted);
    vertex_index_.clear();
    for (int v = 0; v < vertex_count(); ++v)
      vertex_index_.emplace(detail::pack(vertices_[v].k, vertices_[v].l, vertices_[v].up ? 1 : 2), v);
    for (auto& fv : face_vertices_)
      for (int& v : fv) v = relabel[v];

    vertex_faces_.assign(vertices_.size(), {-1, -1, -1});
    rim_.assign(vertices_.size(), 0);
    for (int v = 0; v < vertex_count(); ++v) {
      const auto [k, l, up] = vertices_[v];
      const std::array<FaceCoord, 3> around =
          up ? std::array<FaceCoord, 3>{{{k, l}, {k, l - 1}, {k + 1, l - 1}}}
             : std::array<FaceCoord, 3>{{{k, l}, {k, l + 1}, {k - 1, l + 1}}};
      for (int i = 0; i < 3; ++i) vertex_faces_[v][i] = face_id(around[i]);
      rim_[v] = std::count(vertex_faces_[v].begin(), vertex_faces_[v].end(), -1) > 0;
    }

    // Edges are owned by their UP endpoint.
    vertex_edges_.assign(vertices_.size(), {});
    for (int v = 0; v < vertex_count(); ++v) {
      const auto [k, l, up] = vertices_[v];
      if (!up) continue;
      const std::array<VertexCoord, 3> ends{{{k, l - 1, false}, {k + 1, l - 1, false}, {k + 1, l - 2, false}}};
      const std::array<std::array<FaceCoord, 2>, 3> sides{
          {{{{k, l}, {k, l - 1}}}, {{{k, l}, {k + 1, l - 1}}}, {{{k, l - 1}, {k + 1, l - 1}}}}};
      for (int type = 0; type < 3; ++type) {
        const int a = face_id(sides[type][0]);
        const int b = face_id(sides[type][1]);
        if (a < 0 && b < 0) continue;
        const int w = vertex_id(ends[type]);
        if (w < 0) throw StructuralError("edge endpoint missing from patch");
        const int id = edge_count();
        edges_.push_back({v, w, type, {a, b}});
        edge_index_.emplace(detail::pack(k, l, type), id);
        vertex_edges_[v].push_back(id);
        vertex_edges_[w].push_back(id);
      }
    }

    face_edges_.resize(faces_.size());
    for (int f = 0; f < face_count(); ++f)
      for (int i = 0; i < 6; ++i) {
        const int a = face_vertices_[f][i];
        const int b = face_vertices_[f][(i + 1) % 6];
        const int up = vertices_[a].up ? a : b;
        const int down = up == a ? b : a;
        int found = -1;
        for (int e : vertex_edges_[up])
          if (edges_[e].down == down) found = e;
        if (found < 0) throw StructuralError("hexagon side missing from patch");
        face_edges_[f][i] = found;
      }

    up_index_.assign(vertices_.size(), -1);
    for (int v = 0; v < vertex_count(); ++v)
      if (vertices_[v].up && !rim_[v]) {
        up_index_[v] = static_cast<int>(up_vertices_.size());
        up_vertices_.push_back(v);
      }
  }

  std::vector<FaceCoord> faces_;
  std::unordered_map<std::uint64_t, int> face_index_;
  std::vector<VertexCoord> vertices_;
  std::unordered_map<std::uint64_t, int> vertex_index_;
  std::vector<HexEdge> edges_;
  std::unordered_map<std::uint64_t, int> edge_index_;
  std::vector<std::array<int, 6>> face_vertices_;
  std::vector<std::array<int, 6>> face_edges_;
  std::vector<std::array<int, 3>> vertex_faces_;
  std::vector<std::vector<int>> vertex_edges_;
  std::vector<char> rim_;
  std::vector<int> up_vertices_;
  std::vector<int> up_index_;
};

/// A_r = B_{2r} \ B_r as face coordinates.
inline std::vector<FaceCoord> annulus(int r) {
  if (r < 1) throw RangeError("annulus radius must be positive");
  std::vector<FaceCoord> out;
  for (const auto& f : HexPatch::ball(2 * r).faces())
    if (!detail::in_ball(f, r)) out.push_back(f);
  return out;
}

/// Whether the simple cycle `edges` separates face coordinate f from
/// infinity, by crossing parity along a ray of face centres. The six lattice
/// directions are all evaluated and must agree.
inline bool surrounds_edges(const HexPatch& patch, const std::vector<int>& edges, FaceCoord f) {
  std::vector<char> on(patch.edge_count(), 0);
  for (int e : edges) on[e] = 1;
  int kmin = f.k, kmax = f.k, lmin = f.l, lmax = f.l;
  for (const auto& c : patch.faces()) {
    kmin = std::min(kmin, c.k);
    kmax = std::max(kmax, c.k);
    lmin = std::min(lmin, c.l);
    lmax = std::max(lmax, c.l);
  }
  const int reach = (kmax - kmin) + (lmax - lmin) + 2;
  int verdict = -1;
  for (const auto& d : kFaceDirections) {
    int parity = 0;
    FaceCoord cur = f;
    for (int j = 0; j < reach; ++j) {
      const FaceCoord next = cur + d;
      const int e = patch.edge_between(cur, next);
      if (e >= 0 && on[e]) parity ^= 1;
      cur = next;
    }
    if (verdict >= 0 && verdict != parity) throw StructuralError("ray parities disagree: edge set is not a cycle");
    verdict = parity;
  }
  return verdict == 1;
}

/// Validates `cycle` as a simple closed vertex walk (last vertex adjacent to
/// the first) and returns its edge ids.
inline std::vector<int> cycle_edges(const HexPatch& patch, const std::vector<int>& cycle) {
  if (cycle.size() < 3) throw StructuralError("a cycle needs at least three vertices");
  std::vector<int> sorted = cycle;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw StructuralError("cycle repeats a vertex");
  std::vector<int> out;
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    const int a = cycle[i];
    const int b = cycle[(i + 1) % cycle.size()];
    int found = -1;
    for (int e : patch.vertex_edges(a))
      if (patch.edge(e).other(a) == b) found = e;
    if (found < 0)
      throw StructuralError("cycle vertices " + std::to_string(a) + " and " + std::to_string(b) + " are not adjacent");
    out.push_back(found);
  }
  return out;
}

inline bool surrounds(const HexPatch& patch, const std::vector<int>& cycle, FaceCoord f) {
  return surrounds_edges(patch, cycle_edges(patch, cycle), f);
}

/// Corners of face f as a vertex cycle.
inline std::vector<int> hexagon_cycle(const HexPatch& patch, int f) {
  const auto& fv = patch.face_vertices(f);
  return {fv.begin(), fv.end()};
}

/// Connected, simply connected set of faces of a host patch.
class Domain {
 public:
  Domain() = default;

  Domain(std::shared_ptr<const HexPatch> host, const std::vector<FaceCoord>& faces) : host_(std::move(host)) {
    face_in_.assign(host_->face_count(), 0);
    for (const auto& c : faces) {
      const int f = host_->face_id(c);
      if (f < 0) throw StructuralError("domain face outside host patch");
      face_in_[f] = 1;
    }
    for (int f = 0; f < host_->face_count(); ++f)
      if (face_in_[f]) faces_.push_back(f);
    if (faces_.empty()) throw StructuralError("domain has no faces");
    check_topology();
    derive();
  }

  static Domain whole(std::shared_ptr<const HexPatch> host) {
    std::vector<FaceCoord> faces = host->faces();
    return Domain(std::move(host), faces);
  }

  [[nodiscard]] const HexPatch& host() const { return *host_; }
  [[nodiscard]] const std::shared_ptr<const HexPatch>& host_ptr() const { return host_; }
  [[nodiscard]] const std::vector<int>& faces() const { return faces_; }
  [[nodiscard]] int face_count() const { return static_cast<int>(faces_.size()); }
  [[nodiscard]] bool has_face(int f) const { return f >= 0 && face_in_[f]; }
  [[nodiscard]] bool has_vertex(int v) const { return vertex_in_[v]; }
  [[nodiscard]] bool has_edge(int e) const { return edge_in_[e]; }
  [[nodiscard]] const std::vector<int>& vertices() const { return vertices_; }
  [[nodiscard]] const std::vector<int>& edges() const { return edges_; }
  /// Clockwise boundary cycle starting at its smallest vertex.
  [[nodiscard]] const std::vector<int>& boundary() const { return boundary_; }
  [[nodiscard]] std::vector<FaceCoord> face_coords() const {
    std::vector<FaceCoord> out;
    for (int f : faces_) out.push_back(host_->face(f));
    return out;
  }

  /// Whether every face adjacent to the domain also lies in the host.
  [[nodiscard]] bool has_margin() const {
    for (int f : faces_)
      for (const auto& d : kFaceDirections)
        if (!host_->has_face(host_->face(f) + d)) return false;
    return true;
  }

 private:
  void check_topology() const {
    const HexPatch& h = *host_;
    const int nf = h.face_count();
    UnionFind inside(nf);
    UnionFind outside(nf + 1);  // node nf is the unbounded region
    for (int f = 0; f < nf; ++f)
      for (const auto& d : kFaceDirections) {
        const int g = h.face_id(h.face(f) + d);
        if (g < 0) {
          if (!face_in_[f]) outside.unite(f, nf);
          continue;
        }
        if (face_in_[f] && face_in_[g]) inside.unite(f, g);
        if (!face_in_[f] && !face_in_[g]) outside.unite(f, g);
      }
    for (int f : faces_)
      if (!inside.same(f, faces_.front())) throw StructuralError("domain is not connected");
    for (int f = 0; f < nf; ++f)
      if (!face_in_[f] && !outside.same(f, nf)) throw StructuralError("domain is not simply connected");
  }

  void derive() {
    const HexPatch& h = *host_;
    vertex_in_.assign(h.vertex_count(), 0);
    edge_in_.assign(h.edge_count(), 0);
    for (int f : faces_) {
      for (int v : h.face_vertices(f)) vertex_in_[v] = 1;
      for (int e : h.face_edges(f)) edge_in_[e] = 1;
    }
    for (int v = 0; v < h.vertex_count(); ++v)
      if (vertex_in_[v]) vertices_.push_back(v);
    for (int e = 0; e < h.edge_count(); ++e)
      if (edge_in_[e]) edges_.push_back(e);

    // Boundary edges have exactly one side in the domain; every boundary
    // vertex meets exactly two of them.
    std::vector<std::vector<int>> bnd(h.vertex_count());
    for (int e : edges_) {
      const auto& he = h.edge(e);
      const int inside = has_face(he.faces[0]) + has_face(he.faces[1]);
      if (inside == 1) {
        bnd[he.up].push_back(e);
        bnd[he.down].push_back(e);
      }
    }
    int start = -1;
    for (int v : vertices_)
      if (!bnd[v].empty()) {
        if (bnd[v].size() != 2) throw StructuralError("domain boundary is not a simple cycle");
        if (start < 0) start = v;
      }
    std::vector<int> walk{start};
    int prev_edge = bnd[start][0];
    int cur = h.edge(prev_edge).other(start);
    while (cur != start) {
      walk.push_back(cur);
      const int e = bnd[cur][0] == prev_edge ? bnd[cur][1] : bnd[cur][0];
      prev_edge = e;
      cur = h.edge(e).other(cur);
    }
    __int128 area2 = 0;
    for (std::size_t i = 0; i < walk.size(); ++i) {
      const auto a = h.vertex_position(walk[i]);
      const auto b = h.vertex_position(walk[(i + 1) % walk.size()]);
      area2 += static_cast<__int128>(a[0]) * b[1] - static_cast<__int128>(b[0]) * a[1];
    }
    if (area2 > 0) std::reverse(walk.begin() + 1, walk.end());
    boundary_ = std::move(walk);
  }

  std::shared_ptr<const HexPatch> host_;
  std::vector<char> face_in_;
  std::vector<int> faces_;
  std::vector<char> vertex_in_;
  std::vector<char> edge_in_;
  std::vector<int> vertices_;
  std::vector<int> edges_;
  std::vector<int> boundary_;
};

}  // namespace hexloop
