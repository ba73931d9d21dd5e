#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hexloop/error.hpp"
#include "hexloop/exact_measure.hpp"
#include "hexloop/graph.hpp"
#include "hexloop/rng.hpp"

namespace hexloop {

/// One state per vertex (1 = open).
using SiteConfig = std::vector<std::uint8_t>;
/// One state per edge of a fixed edge list.
using BondConfig = std::vector<std::uint8_t>;
/// Class label per vertex.
using Partition = std::vector<int>;
/// Site configuration on at most 32 sites, bit i = site i.
using SiteMask = std::uint32_t;

inline void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw RangeError("probability " + std::to_string(p) + " outside [0,1]");
}

inline SiteConfig bernoulli_sites(int n, double p, CounterRng& rng) {
  check_probability(p);
  SiteConfig s(n);
  for (auto& b : s) b = rng.bernoulli(p);
  return s;
}

inline SiteConfig bernoulli_sites(const Graph& host, double p, std::uint64_t seed) {
  CounterRng rng(seed);
  return bernoulli_sites(host.size(), p, rng);
}

inline SiteConfig complement(SiteConfig s) {
  for (auto& b : s) b ^= 1;
  return s;
}

struct Clusters {
  std::vector<int> label;  // -1 for vertices not in the state
  std::vector<int> sizes;
  [[nodiscard]] int count() const { return static_cast<int>(sizes.size()); }
  [[nodiscard]] int largest() const { return sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end()); }
};

/// Labels are assigned in order of each cluster's smallest vertex.
inline Clusters clusters(const Graph& g, const SiteConfig& cfg, std::uint8_t state) {
  UnionFind uf(g.size());
  for (int v = 0; v < g.size(); ++v)
    if (cfg[v] == state)
      for (int w : g.neighbors(v))
        if (w > v && cfg[w] == state) uf.unite(v, w);
  Clusters out;
  out.label.assign(g.size(), -1);
  std::vector<int> root_label(g.size(), -1);
  for (int v = 0; v < g.size(); ++v) {
    if (cfg[v] != state) continue;
    const int r = uf.find(v);
    if (root_label[r] < 0) {
      root_label[r] = out.count();
      out.sizes.push_back(0);
    }
    out.label[v] = root_label[r];
    ++out.sizes[root_label[r]];
  }
  return out;
}

/// Whether some state-cluster meets both vertex sets.
inline bool connects(const Graph& g, const SiteConfig& cfg, std::uint8_t state, const std::vector<int>& a,
                     const std::vector<int>& b) {
  std::vector<char> target(g.size(), 0), seen(g.size(), 0);
  for (int v : b) target[v] = 1;
  std::deque<int> q;
  for (int v : a)
    if (cfg[v] == state && !seen[v]) {
      seen[v] = 1;
      q.push_back(v);
    }
  while (!q.empty()) {
    const int v = q.front();
    q.pop_front();
    if (target[v]) return true;
    for (int w : g.neighbors(v))
      if (!seen[w] && cfg[w] == state) {
        seen[w] = 1;
        q.push_back(w);
      }
  }
  return false;
}

/// Every class coloured open with probability p, classes independent. Coins
/// are drawn in order of each class's smallest vertex.
inline SiteConfig divide_and_color(const Partition& part, double p, CounterRng& rng) {
  check_probability(p);
  std::map<int, std::uint8_t> colour;
  for (int v = 0; v < static_cast<int>(part.size()); ++v)
    if (!colour.count(part[v])) colour[part[v]] = rng.bernoulli(p);
  SiteConfig s(part.size());
  for (std::size_t v = 0; v < part.size(); ++v) s[v] = colour[part[v]];
  return s;
}

inline SiteConfig divide_and_color(const Partition& part, double p, std::uint64_t seed) {
  CounterRng rng(seed);
  return divide_and_color(part, p, rng);
}

/// Exact law of divide_and_color on at most 20 sites.
inline ExactMeasure<SiteMask> divide_and_color_law(const Partition& part, double p) {
  check_probability(p);
  const int m = static_cast<int>(part.size());
  if (m > 20) throw RangeError("exact law limited to 20 sites");
  std::vector<int> labels(part.begin(), part.end());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  const int c = static_cast<int>(labels.size());
  std::vector<SiteMask> configs;
  std::vector<double> probs;
  for (std::uint32_t open = 0; open < (1u << c); ++open) {
    SiteMask s = 0;
    int k = 0;
    for (int v = 0; v < m; ++v) {
      const int idx = static_cast<int>(std::lower_bound(labels.begin(), labels.end(), part[v]) - labels.begin());
      if (open >> idx & 1u) s |= 1u << v;
    }
    for (int i = 0; i < c; ++i) k += open >> i & 1u;
    configs.push_back(s);
    probs.push_back(std::pow(p, k) * std::pow(1.0 - p, c - k));
  }
  return {configs, probs};
}

/// Independent sites with individual open probabilities.
inline ExactMeasure<SiteMask> product_law(const std::vector<double>& ps) {
  const int m = static_cast<int>(ps.size());
  if (m > 20) throw RangeError("exact law limited to 20 sites");
  for (double p : ps) check_probability(p);
  std::vector<SiteMask> configs;
  std::vector<double> probs;
  for (SiteMask s = 0; s < (1u << m); ++s) {
    double w = 1.0;
    for (int i = 0; i < m; ++i) w *= (s >> i & 1u) ? ps[i] : 1.0 - ps[i];
    configs.push_back(s);
    probs.push_back(w);
  }
  return {configs, probs};
}

inline ExactMeasure<SiteMask> bernoulli_law(int m, double p) { return product_law(std::vector<double>(m, p)); }

/// σ_v = [U_v < p], τ_v = [U_v < 1-p] from shared uniforms, so σ <= τ.
inline std::pair<SiteConfig, SiteConfig> monotone_coupling(int n, double p, CounterRng& rng) {
  check_probability(p);
  if (p > 0.5) throw RangeError("monotone coupling of Bernoulli(p) below its complement needs p <= 1/2");
  SiteConfig sigma(n), tau(n);
  for (int v = 0; v < n; ++v) {
    const double u = rng.uniform01();
    sigma[v] = u < p;
    tau[v] = u < 1.0 - p;
  }
  return {sigma, tau};
}

inline std::pair<SiteConfig, SiteConfig> monotone_coupling(const Graph& host, double p, std::uint64_t seed) {
  CounterRng rng(seed);
  return monotone_coupling(host.size(), p, rng);
}

/// Indicator of an event on {0,1}^m as a truth table: bit s is 1 iff the
/// configuration with site mask s belongs to the event.
using EventTable = std::uint16_t;

/// All non-decreasing events on m <= 4 sites, ordered by truth table.
inline std::vector<EventTable> increasing_events(int m) {
  if (m < 0 || m > 4) throw RangeError("increasing events are enumerated only for m <= 4");
  const int states = 1 << m;
  const std::uint32_t tables = 1u << states;
  std::vector<EventTable> out;
  for (std::uint32_t t = 0; t < tables; ++t) {
    bool monotone = true;
    for (int s = 0; s < states && monotone; ++s) {
      if (!(t >> s & 1u)) continue;
      for (int i = 0; i < m; ++i)
        if (!(t >> (s | (1 << i)) & 1u)) {
          monotone = false;
          break;
        }
    }
    if (monotone) out.push_back(static_cast<EventTable>(t));
  }
  return out;
}

namespace detail {

inline void check_sites(const ExactMeasure<SiteMask>& mu, int m) {
  if (m < 0 || m > 4) throw RangeError("association checks are limited to 4 sites");
  for (SiteMask s : mu.configs())
    if (s >> m) throw StructuralError("configuration uses a site beyond m");
}

inline double event_prob(const ExactMeasure<SiteMask>& mu, EventTable t, SiteMask flip = 0) {
  double p = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (t >> (mu.config(i) ^ flip) & 1u) p += mu.prob(i);
  return p;
}

}  // namespace detail

struct AssociationGap {
  double gap = 0.0;
  EventTable a = 0;
  EventTable b = 0;
};

/// min over increasing A, B of P(A ∩ B) - P(A) P(B).
inline AssociationGap check_positive_association(const ExactMeasure<SiteMask>& mu, int m) {
  detail::check_sites(mu, m);
  const auto events = increasing_events(m);
  std::vector<double> pa;
  for (auto t : events) pa.push_back(detail::event_prob(mu, t));
  AssociationGap worst{std::numeric_limits<double>::infinity(), 0, 0};
  for (std::size_t i = 0; i < events.size(); ++i)
    for (std::size_t j = i; j < events.size(); ++j) {
      const double gap = detail::event_prob(mu, events[i] & events[j]) - pa[i] * pa[j];
      if (gap < worst.gap) worst = {gap, events[i], events[j]};
    }
  return worst;
}

/// min over increasing A of P(1-σ ∈ A) - P(σ ∈ A).
inline AssociationGap check_dominated_by_complement(const ExactMeasure<SiteMask>& mu, int m) {
  detail::check_sites(mu, m);
  const SiteMask all = m == 0 ? 0 : (1u << m) - 1;
  AssociationGap worst{std::numeric_limits<double>::infinity(), 0, 0};
  for (auto t : increasing_events(m)) {
    const double gap = detail::event_prob(mu, t, all) - detail::event_prob(mu, t);
    if (gap < worst.gap) worst = {gap, t, t};
  }
  return worst;
}

/// Edge subset of a host graph with no cycles.
struct SpanningForest {
  int vertex_count = 0;
  std::vector<std::pair<int, int>> edges;

  [[nodiscard]] Graph graph() const {
    Graph g(vertex_count);
    for (const auto& [u, v] : edges) g.add_edge(u, v);
    return g;
  }

  [[nodiscard]] bool acyclic() const {
    UnionFind uf(vertex_count);
    for (const auto& [u, v] : edges)
      if (!uf.unite(u, v)) return false;
    return true;
  }

  /// Edges normalised (min, max) and sorted; identifies the forest.
  [[nodiscard]] std::vector<std::pair<int, int>> canonical() const {
    auto out = edges;
    for (auto& [u, v] : out)
      if (u > v) std::swap(u, v);
    std::sort(out.begin(), out.end());
    return out;
  }
};

inline bool is_connected(const Graph& g) {
  if (g.size() == 0) return false;
  std::vector<char> seen(g.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : g.neighbors(v))
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
  }
  return reached == g.size();
}

/// Uniform spanning tree by loop-erased random walks rooted at vertex 0.
inline SpanningForest wilson_ust(const Graph& g, CounterRng& rng) {
  if (!is_connected(g)) throw PreconditionError("spanning tree requested on an empty or disconnected graph");
  const int n = g.size();
  std::vector<char> in_tree(n, 0);
  std::vector<int> next(n, -1);
  in_tree[0] = 1;
  for (int start = 1; start < n; ++start) {
    int v = start;
    while (!in_tree[v]) {
      const auto& nb = g.neighbors(v);
      next[v] = nb[rng.below(nb.size())];
      v = next[v];
    }
    for (v = start; !in_tree[v]; v = next[v]) in_tree[v] = 1;
  }
  SpanningForest t{n, {}};
  for (int v = 1; v < n; ++v) t.edges.emplace_back(v, next[v]);
  return t;
}

inline SpanningForest wilson_ust(const Graph& g, std::uint64_t seed) {
  CounterRng rng(seed);
  return wilson_ust(g, rng);
}

/// Vertices of K adjacent to a vertex outside K.
inline std::vector<int> vertex_boundary(const Graph& ambient, const std::vector<int>& k) {
  std::vector<char> in(ambient.size(), 0);
  for (int v : k) in[v] = 1;
  std::vector<int> out;
  for (int v : k)
    for (int w : ambient.neighbors(v))
      if (!in[w]) {
        out.push_back(v);
        break;
      }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Vertices v of K whose deletion splits their forest component into at
/// least three parts that each meet B.
inline std::vector<int> trifurcations(const SpanningForest& f, const std::vector<int>& k, const std::vector<int>& b) {
  if (!f.acyclic()) throw StructuralError("forest contains a cycle");
  const Graph g = f.graph();
  std::vector<char> in_b(f.vertex_count, 0);
  for (int v : b) in_b[v] = 1;
  std::vector<int> out;
  std::vector<int> mark(f.vertex_count, -1);
  int stamp = 0;
  for (int v : k) {
    int branches = 0;
    for (int w : g.neighbors(v)) {
      ++stamp;
      mark[v] = stamp;
      mark[w] = stamp;
      std::vector<int> stack{w};
      bool hit = false;
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        if (in_b[u]) hit = true;
        for (int x : g.neighbors(u))
          if (mark[x] != stamp) {
            mark[x] = stamp;
            stack.push_back(x);
          }
      }
      if (hit) ++branches;
    }
    if (branches >= 3) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct TrifurcationCheck {
  int trifurcations = 0;
  int boundary = 0;
  [[nodiscard]] bool ok() const { return trifurcations <= boundary; }
};

/// Count of trifurcations against B = ∂K taken in the ambient graph.
inline TrifurcationCheck trifurcation_bound_check(const SpanningForest& f, const std::vector<int>& k,
                                                  const Graph& ambient) {
  const auto b = vertex_boundary(ambient, k);
  return {static_cast<int>(trifurcations(f, k, b).size()), static_cast<int>(b.size())};
}

/// Side-L rhombus of the triangular lattice, vertex (i, j) at index j*L + i.
inline Graph triangular_rhombus(int side) {
  if (side < 1) throw RangeError("rhombus side must be positive");
  Graph g(side * side);
  for (int j = 0; j < side; ++j)
    for (int i = 0; i < side; ++i) {
      const int v = j * side + i;
      if (i + 1 < side) g.add_edge(v, v + 1);
      if (j + 1 < side) g.add_edge(v, v + side);
      if (i > 0 && j + 1 < side) g.add_edge(v, v + side - 1);
    }
  return g;
}

/// Open path from row 0 to row side-1 of a triangular rhombus.
inline bool rhombus_crossing(const Graph& g, int side, const SiteConfig& cfg) {
  std::vector<int> top, bottom;
  for (int i = 0; i < side; ++i) {
    top.push_back(i);
    bottom.push_back((side - 1) * side + i);
  }
  return connects(g, cfg, 1, top, bottom);
}

}  // namespace hexloop
