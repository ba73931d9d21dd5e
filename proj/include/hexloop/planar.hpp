#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hexloop/error.hpp"
#include "hexloop/graph.hpp"

namespace hexloop {

/// A dart is a directed edge: dart 2e runs first -> second of edge e, dart
/// 2e+1 runs back.
constexpr int dart_edge(int dart) { return dart >> 1; }
constexpr int dart_reverse(int dart) { return dart ^ 1; }

/// Finite simple graph with a rotation system (counter-clockwise cyclic order
/// of incident edges at every vertex) and a designated outer face, given by
/// one dart on its boundary.
class PlanarGraph {
 public:
  using Edge = std::pair<int, int>;

  PlanarGraph() = default;

  /// Throws StructuralError unless every edge appears exactly once in the
  /// rotation of each of its endpoints and nowhere else.
  PlanarGraph(int vertex_count, std::vector<Edge> edges, std::vector<std::vector<int>> rotation,
              int outer_dart = -1)
      : vertex_count_(vertex_count), edges_(std::move(edges)), rotation_(std::move(rotation)),
        outer_dart_(outer_dart) {
    validate();
  }

  /// Straight-line embedding: rotations from angles, outer face from signed
  /// area (the unique traced face with negative area on a connected graph).
  static PlanarGraph from_positions(const std::vector<std::array<std::int64_t, 2>>& pos,
                                    std::vector<Edge> edges);

  [[nodiscard]] int vertex_count() const { return vertex_count_; }
  [[nodiscard]] int edge_count() const { return static_cast<int>(edges_.size()); }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
  [[nodiscard]] const std::vector<int>& rotation(int v) const { return rotation_[v]; }
  [[nodiscard]] int outer_dart() const { return outer_dart_; }

  [[nodiscard]] int dart_tail(int d) const {
    const auto& e = edges_[dart_edge(d)];
    return (d & 1) ? e.second : e.first;
  }
  [[nodiscard]] int dart_head(int d) const { return dart_tail(dart_reverse(d)); }

  /// Dart leaving v along edge e.
  [[nodiscard]] int dart_from(int v, int e) const { return 2 * e + (edges_[e].first == v ? 0 : 1); }

  /// Face-tracing successor: arrive at v along d, leave along the edge that
  /// precedes d's edge in v's counter-clockwise rotation. Bounded faces of a
  /// straight-line embedding are traced counter-clockwise (face on the left).
  [[nodiscard]] int next_dart(int d) const {
    const int v = dart_head(d);
    const auto& rot = rotation_[v];
    const int e = dart_edge(d);
    const auto it = std::find(rot.begin(), rot.end(), e);
    const auto pos = static_cast<std::size_t>(it - rot.begin());
    const int prev = rot[(pos + rot.size() - 1) % rot.size()];
    return dart_from(v, prev);
  }

  [[nodiscard]] Graph adjacency() const {
    Graph g(vertex_count_);
    for (const auto& [u, v] : edges_) g.add_edge(u, v);
    return g;
  }

 private:
  void validate() const {
    if (static_cast<int>(rotation_.size()) != vertex_count_)
      throw StructuralError("rotation system has " + std::to_string(rotation_.size()) +
                            " entries for " + std::to_string(vertex_count_) + " vertices");
    std::vector<int> seen(edges_.size() * 2, 0);
    for (int e = 0; e < edge_count(); ++e) {
      const auto [u, v] = edges_[e];
      if (u < 0 || v < 0 || u >= vertex_count_ || v >= vertex_count_ || u == v)
        throw StructuralError("edge " + std::to_string(e) + " has invalid endpoints");
    }
    for (int v = 0; v < vertex_count_; ++v) {
      for (int e : rotation_[v]) {
        if (e < 0 || e >= edge_count())
          throw StructuralError("rotation of vertex " + std::to_string(v) + " names unknown edge");
        const auto [a, b] = edges_[e];
        if (a != v && b != v)
          throw StructuralError("rotation of vertex " + std::to_string(v) + " lists non-incident edge " +
                                std::to_string(e));
        ++seen[2 * e + (a == v ? 0 : 1)];
      }
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (seen[i] != 1)
        throw StructuralError("edge " + std::to_string(i / 2) + " appears " + std::to_string(seen[i]) +
                              " times in a rotation");
    if (outer_dart_ >= 2 * edge_count()) throw StructuralError("outer dart out of range");
  }

  int vertex_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> rotation_;
  int outer_dart_ = -1;
};

/// Faces of a rotation system; each face is its cyclic dart sequence.
struct FaceTrace {
  std::vector<std::vector<int>> faces;
  std::vector<int> face_of_dart;
  int outer_face = -1;
};

inline FaceTrace trace_faces(const PlanarGraph& g) {
  FaceTrace out;
  const int darts = 2 * g.edge_count();
  out.face_of_dart.assign(darts, -1);
  for (int start = 0; start < darts; ++start) {
    if (out.face_of_dart[start] >= 0) continue;
    const int id = static_cast<int>(out.faces.size());
    std::vector<int> walk;
    int d = start;
    do {
      if (out.face_of_dart[d] >= 0) throw StructuralError("face tracing did not close up");
      out.face_of_dart[d] = id;
      walk.push_back(d);
      d = g.next_dart(d);
    } while (d != start);
    out.faces.push_back(std::move(walk));
  }
  if (g.outer_dart() >= 0) out.outer_face = out.face_of_dart[g.outer_dart()];
  return out;
}

/// Number of connected components, isolated vertices included.
inline int component_count(const PlanarGraph& g) {
  UnionFind uf(g.vertex_count());
  int count = g.vertex_count();
  for (const auto& [u, v] : g.edges())
    if (uf.unite(u, v)) --count;
  return count;
}

/// Tracing sees each component as its own sphere, so V - E + F = 2C, with an
/// untraced face for every isolated vertex.
inline bool euler_relation_holds(const PlanarGraph& g, const FaceTrace& faces) {
  int isolated = 0;
  for (int v = 0; v < g.vertex_count(); ++v)
    if (g.rotation(v).empty()) ++isolated;
  const int f = static_cast<int>(faces.faces.size()) + isolated;
  return g.vertex_count() - g.edge_count() + f == 2 * component_count(g);
}

inline PlanarGraph PlanarGraph::from_positions(const std::vector<std::array<std::int64_t, 2>>& pos,
                                               std::vector<Edge> edges) {
  const int n = static_cast<int>(pos.size());
  std::vector<std::vector<int>> rotation(n);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    rotation[edges[e].first].push_back(e);
    rotation[edges[e].second].push_back(e);
  }
  for (int v = 0; v < n; ++v) {
    auto angle = [&](int e) {
      const int w = edges[e].first == v ? edges[e].second : edges[e].first;
      const double dx = static_cast<double>(pos[w][0] - pos[v][0]);
      const double dy = static_cast<double>(pos[w][1] - pos[v][1]);
      return std::atan2(dy, dx);
    };
    std::sort(rotation[v].begin(), rotation[v].end(), [&](int a, int b) { return angle(a) < angle(b); });
  }
  PlanarGraph g(n, std::move(edges), std::move(rotation));
  const FaceTrace faces = trace_faces(g);
  for (const auto& face : faces.faces) {
    __int128 area2 = 0;
    for (int d : face) {
      const auto& a = pos[g.dart_tail(d)];
      const auto& b = pos[g.dart_head(d)];
      area2 += static_cast<__int128>(a[0]) * b[1] - static_cast<__int128>(b[0]) * a[1];
    }
    if (area2 < 0) {
      g.outer_dart_ = face.front();
      break;
    }
  }
  if (g.outer_dart_ < 0 && g.edge_count() > 0) g.outer_dart_ = faces.faces.front().front();
  return g;
}

/// Breadth-first ball Λ_n(ρ) and its shell ∂Λ_n(ρ) (distance exactly n).
struct Ball {
  std::vector<int> distance;  // -1 beyond radius
  std::vector<int> vertices;
  std::vector<int> shell;

  [[nodiscard]] bool contains(int v) const { return distance[v] >= 0; }
};

inline Ball combinatorial_ball(const Graph& g, int root, int radius) {
  if (root < 0 || root >= g.size()) throw PreconditionError("root is not a vertex of the graph");
  Ball ball;
  ball.distance.assign(g.size(), -1);
  ball.distance[root] = 0;
  std::deque<int> queue{root};
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    ball.vertices.push_back(v);
    if (ball.distance[v] == radius) {
      ball.shell.push_back(v);
      continue;
    }
    for (int w : g.neighbors(v)) {
      if (ball.distance[w] >= 0) continue;
      ball.distance[w] = ball.distance[v] + 1;
      queue.push_back(w);
    }
  }
  std::sort(ball.vertices.begin(), ball.vertices.end());
  std::sort(ball.shell.begin(), ball.shell.end());
  return ball;
}

inline Ball combinatorial_ball(const PlanarGraph& g, int root, int radius) {
  return combinatorial_ball(g.adjacency(), root, radius);
}

/// Domain Ω_n cut out by the ball Λ_n(ρ), its boundary walk J_n and the
/// ordered cut set S_n = J_n ∩ ∂Λ_n(ρ). The outer face plays the role of the
/// point every infinite path runs to.
struct CutSet {
  int root = 0;
  int radius = 0;
  Ball ball;
  std::vector<char> in_omega;         // per vertex
  std::vector<char> face_in_omega;    // per traced face of the host
  std::vector<int> boundary_walk;     // J_n as a closed vertex walk, clockwise
  std::vector<int> cut;               // S_n in walk order from its smallest vertex

  [[nodiscard]] int size() const { return static_cast<int>(cut.size()); }
  [[nodiscard]] bool outside(int v) const { return !in_omega[v]; }
};

inline CutSet cut_set(const PlanarGraph& g, const FaceTrace& faces, int root, int radius) {
  if (radius < 0) throw PreconditionError("radius must be nonnegative");
  if (faces.outer_face < 0) throw PreconditionError("planar graph has no designated outer face");
  CutSet cs;
  cs.root = root;
  cs.radius = radius;
  cs.ball = combinatorial_ball(g, root, radius);
  const auto& ball = cs.ball;

  for (int d : faces.faces[faces.outer_face])
    if (ball.contains(g.dart_tail(d))) throw PreconditionError("patch too small: ball reaches the outer face");

  // Q_n: faces and non-ball vertices reachable from the outer face without
  // crossing the ball.
  const int nf = static_cast<int>(faces.faces.size());
  const int nv = g.vertex_count();
  UnionFind uf(nf + nv);
  for (int f = 0; f < nf; ++f)
    for (int d : faces.faces[f]) {
      const int v = g.dart_tail(d);
      if (!ball.contains(v)) uf.unite(f, nf + v);
    }
  const int q = uf.find(faces.outer_face);
  cs.face_in_omega.assign(nf, 1);
  for (int f = 0; f < nf; ++f)
    if (uf.find(f) == q) cs.face_in_omega[f] = 0;
  cs.in_omega.assign(nv, 1);
  for (int v = 0; v < nv; ++v)
    if (!ball.contains(v) && uf.find(nf + v) == q) cs.in_omega[v] = 0;

  // J_n is the boundary walk of the face of the ball subgraph containing Q_n.
  int start = -1;
  for (int d = 0; d < 2 * g.edge_count() && start < 0; ++d)
    if (ball.contains(g.dart_tail(d)) && ball.contains(g.dart_head(d)) && !cs.face_in_omega[faces.face_of_dart[d]])
      start = d;
  if (start < 0) {
    cs.boundary_walk = {root};
  } else {
    auto next_in_ball = [&](int d) {
      const int v = g.dart_head(d);
      const auto& rot = g.rotation(v);
      auto pos = static_cast<std::size_t>(std::find(rot.begin(), rot.end(), dart_edge(d)) - rot.begin());
      for (;;) {
        pos = (pos + rot.size() - 1) % rot.size();
        const int nd = g.dart_from(v, rot[pos]);
        if (ball.contains(g.dart_head(nd))) return nd;
      }
    };
    int d = start;
    do {
      cs.boundary_walk.push_back(g.dart_tail(d));
      d = next_in_ball(d);
    } while (d != start);
  }

  std::vector<int> order;
  for (int v : cs.boundary_walk)
    if (ball.distance[v] == radius) order.push_back(v);
  if (!order.empty()) {
    auto first = std::min_element(order.begin(), order.end());
    std::rotate(order.begin(), first, order.end());
  }
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw StructuralError("cut-set vertex visited twice by the boundary walk");
  cs.cut = std::move(order);
  return cs;
}

inline CutSet cut_set(const PlanarGraph& g, int root, int radius) { return cut_set(g, trace_faces(g), root, radius); }

/// Vertices on the boundary of the designated outer face.
inline std::vector<int> outer_boundary(const PlanarGraph& g, const FaceTrace& faces) {
  std::vector<int> out;
  if (faces.outer_face < 0) return out;
  for (int d : faces.faces[faces.outer_face]) out.push_back(g.dart_tail(d));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace hexloop
