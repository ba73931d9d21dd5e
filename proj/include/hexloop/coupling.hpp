#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hexloop/error.hpp"
#include "hexloop/exact_measure.hpp"
#include "hexloop/graph.hpp"
#include "hexloop/hex_patch.hpp"
#include "hexloop/loop_model.hpp"
#include "hexloop/percolation.hpp"
#include "hexloop/rng.hpp"

namespace hexloop {

/// ±1 per face of the host patch.
using SpinConfig = std::vector<std::int8_t>;

/// Open sites of ξ on T↑, indexed as HexPatch::up_vertices().
struct Blocking {
  std::shared_ptr<const HexPatch> patch;
  SiteConfig open;

  Blocking() = default;
  explicit Blocking(std::shared_ptr<const HexPatch> p) : patch(std::move(p)), open(patch->up_vertices().size(), 0) {}

  [[nodiscard]] bool vertex_open(int v) const {
    const int i = patch->up_index(v);
    return i >= 0 && open[i] != 0;
  }
  [[nodiscard]] int count() const { return static_cast<int>(std::count(open.begin(), open.end(), 1)); }
  [[nodiscard]] std::vector<int> open_vertices() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < open.size(); ++i)
      if (open[i]) out.push_back(patch->up_vertices()[i]);
    return out;
  }
  [[nodiscard]] nlohmann::json to_json() const { return open_vertices(); }

  friend bool operator==(const Blocking& a, const Blocking& b) { return a.open == b.open; }
  friend bool operator<(const Blocking& a, const Blocking& b) { return a.open < b.open; }
};

/// The loops and isolated T↑ sites that receive a coin.
struct BlockingCandidates {
  std::vector<int> loops;     // indices into LoopDecomposition::loops
  std::vector<int> vertices;  // up indices of degree-0 sites
};

/// Loops meeting V(Ω) and degree-0 T↑ sites in V(Ω); everything when domain is null.
inline BlockingCandidates blocking_candidates(const LoopConfig& w, const LoopDecomposition& dec,
                                              const Domain* domain = nullptr) {
  const HexPatch& h = w.patch();
  BlockingCandidates c;
  for (std::size_t i = 0; i < dec.loops.size(); ++i) {
    bool meets = domain == nullptr;
    for (int v : dec.loops[i].vertices) meets = meets || domain->has_vertex(v);
    if (meets) c.loops.push_back(static_cast<int>(i));
  }
  const auto& ups = h.up_vertices();
  for (std::size_t i = 0; i < ups.size(); ++i)
    if (w.degree(ups[i]) == 0 && (domain == nullptr || domain->has_vertex(ups[i]))) c.vertices.push_back(static_cast<int>(i));
  return c;
}

/// ξ from explicit coins: open loops contribute all their UP vertices, open
/// sites must have degree 0. Paths are never opened.
inline Blocking make_blocking(const LoopConfig& w, const LoopDecomposition& dec, const std::vector<int>& open_loops,
                              const std::vector<int>& open_sites) {
  const HexPatch& h = w.patch();
  Blocking xi(w.patch_ptr());
  for (int l : open_loops) {
    for (int v : dec.loops.at(l).vertices) {
      if (!h.vertex(v).up) continue;
      const int i = h.up_index(v);
      if (i < 0) throw PreconditionError("blocked loop runs through the rim of the host patch");
      xi.open[i] = 1;
    }
  }
  for (int i : open_sites) {
    if (w.degree(h.up_vertices().at(i)) != 0) throw PreconditionError("blocked site lies on the configuration");
    xi.open[i] = 1;
  }
  return xi;
}

inline void check_blocking_parameters(double n, double x) {
  if (!(n >= 1.0) || !(x > 0.0 && x <= 1.0)) throw RangeError("blocking probabilities out of range");
}

/// Loops open with probability (n-1)/n in decomposition order, then
/// isolated sites open with probability 1-x² in vertex order.
inline Blocking sample_xi(const LoopConfig& w, double n, double x, CounterRng& rng, const Domain* domain = nullptr) {
  check_blocking_parameters(n, x);
  const auto dec = decompose(w, domain);
  const auto cand = blocking_candidates(w, dec, domain);
  const double p_loop = (n - 1.0) / n;
  const double p_site = 1.0 - x * x;
  std::vector<int> loops, sites;
  for (int l : cand.loops)
    if (rng.bernoulli(p_loop)) loops.push_back(l);
  for (int i : cand.vertices)
    if (rng.bernoulli(p_site)) sites.push_back(i);
  return make_blocking(w, dec, loops, sites);
}

inline Blocking sample_xi(const LoopConfig& w, double n, double x, std::uint64_t seed, const Domain* domain = nullptr) {
  CounterRng rng(seed);
  return sample_xi(w, n, x, rng, domain);
}

/// Edges separating faces of opposite spin.
inline LoopConfig dw(std::shared_ptr<const HexPatch> patch, const SpinConfig& sigma) {
  if (static_cast<int>(sigma.size()) != patch->face_count()) throw StructuralError("spin vector has the wrong length");
  LoopConfig w(patch);
  for (int e = 0; e < patch->edge_count(); ++e) {
    const auto& ed = patch->edge(e);
    if (ed.interior() && sigma[ed.faces[0]] != sigma[ed.faces[1]]) w.set(e, true);
  }
  return w;
}

/// The preimage of ω under dw with σ(anchor) = s.
inline SpinConfig dw_inverse(const LoopConfig& w, int anchor, int s) {
  const HexPatch& h = w.patch();
  if (anchor < 0 || anchor >= h.face_count()) throw PreconditionError("anchor face not in patch");
  if (s != 1 && s != -1) throw PreconditionError("anchor spin must be +1 or -1");
  for (int e : w.edge_ids())
    if (!h.edge(e).interior()) throw PreconditionError("edge " + std::to_string(e) + " on the patch rim has no domain-wall preimage");
  SpinConfig sigma(h.face_count(), 0);
  sigma[anchor] = static_cast<std::int8_t>(s);
  std::queue<int> q;
  q.push(anchor);
  while (!q.empty()) {
    const int f = q.front();
    q.pop();
    for (int e : h.face_edges(f)) {
      const auto& ed = h.edge(e);
      if (!ed.interior()) continue;
      const int g = ed.faces[0] == f ? ed.faces[1] : ed.faces[0];
      const auto want = static_cast<std::int8_t>(w.has(e) ? -sigma[f] : sigma[f]);
      if (sigma[g] == 0) {
        sigma[g] = want;
        q.push(g);
      } else if (sigma[g] != want) {
        throw StructuralError("configuration is not a domain-wall set");
      }
    }
  }
  if (std::count(sigma.begin(), sigma.end(), 0) != 0) throw StructuralError("patch faces are not connected");
  return sigma;
}

using FacePair = std::pair<int, int>;

/// Edges of the up-triangles of the open ξ-sites, as sorted face pairs.
inline std::vector<FacePair> delta(const Blocking& xi) {
  const HexPatch& h = *xi.patch;
  std::vector<FacePair> out;
  for (int v : xi.open_vertices()) {
    const auto& fs = h.vertex_faces(v);
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b) out.emplace_back(std::min(fs[a], fs[b]), std::max(fs[a], fs[b]));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline nlohmann::json delta_to_json(const std::vector<FacePair>& d) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [a, b] : d) j.push_back({a, b});
  return j;
}

/// Face clusters of Δ(ξ); faces in no Δ edge are singletons.
inline UnionFind delta_clusters(const Blocking& xi) {
  UnionFind uf(xi.patch->face_count());
  for (const auto& [a, b] : delta(xi)) uf.unite(a, b);
  return uf;
}

struct OmegaSplit {
  LoopConfig free;
  LoopConfig block;

  [[nodiscard]] nlohmann::json to_json() const { return {{"free", free.edge_ids()}, {"block", block.edge_ids()}}; }
};

/// Components of ω whose UP vertices are all open go to ω^block, the rest to ω^free.
inline OmegaSplit split_omega(const LoopConfig& w, const Blocking& xi) {
  if (xi.patch != w.patch_ptr()) throw PreconditionError("blocking lives on another patch");
  const HexPatch& h = w.patch();
  const auto dec = decompose(w);
  OmegaSplit s{LoopConfig(w.patch_ptr()), LoopConfig(w.patch_ptr())};
  auto place = [&](const LoopComponent& c, bool may_block) {
    int open = 0, ups = 0;
    for (int v : c.vertices) {
      if (!h.vertex(v).up) continue;
      ++ups;
      open += xi.vertex_open(v);
    }
    if (open != 0 && (open != ups || !may_block)) throw PreconditionError("inconsistent blocking");
    LoopConfig& dst = open != 0 ? s.block : s.free;
    for (int e : c.edges) dst.set(e, true);
  };
  for (const auto& l : dec.loops) place(l, true);
  for (const auto& p : dec.paths) place(p, false);
  return s;
}

/// Δ(ξ) clusters lying wholly inside a face window, each sorted, ordered by smallest face.
inline std::vector<std::vector<int>> window_clusters(const Blocking& xi, const std::vector<int>& window) {
  const HexPatch& h = *xi.patch;
  auto uf = delta_clusters(xi);
  std::vector<char> in_window(h.face_count(), 0);
  for (int f : window) in_window.at(f) = 1;
  std::map<int, std::vector<int>> by_root;
  std::map<int, bool> inside;
  for (int f = 0; f < h.face_count(); ++f) {
    const int r = uf.find(f);
    by_root[r].push_back(f);
    auto it = inside.emplace(r, true).first;
    it->second = it->second && in_window[f];
  }
  std::vector<std::vector<int>> out;
  for (auto& [r, faces] : by_root)
    if (inside[r]) out.push_back(std::move(faces));
  std::sort(out.begin(), out.end());
  return out;
}

/// σ_bc with the listed clusters set to the given signs.
inline SpinConfig sigma_tilde(SpinConfig sigma_bc, const std::vector<std::vector<int>>& clusters,
                              const std::vector<std::int8_t>& signs) {
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (int f : clusters[c]) sigma_bc[f] = signs.at(c);
  return sigma_bc;
}

/// Each Δ(ξ) cluster inside the window gets a uniform sign from the stream
/// forked at its smallest face id.
inline SpinConfig sigma_tilde(const SpinConfig& sigma_bc, const Blocking& xi, const std::vector<int>& window,
                              const CounterRng& rng) {
  const auto clusters = window_clusters(xi, window);
  std::vector<std::int8_t> signs;
  signs.reserve(clusters.size());
  for (const auto& c : clusters) {
    CounterRng coin = rng.fork(static_cast<std::uint64_t>(c.front()));
    signs.push_back(coin() & 1 ? 1 : -1);
  }
  return sigma_tilde(sigma_bc, clusters, signs);
}

/// Host face ids of a list of coordinates; throws if a face lies outside Ω.
inline std::vector<int> window_faces(const GibbsSpec& spec, const std::vector<FaceCoord>& coords) {
  std::vector<int> out;
  for (const auto& c : coords) {
    const int f = spec.host().face_id(c);
    if (!spec.domain.has_face(f)) throw PreconditionError("resample window must lie inside the domain");
    out.push_back(f);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Face (0,0) when present, else the smallest window face.
inline int resample_anchor(const HexPatch& h, const std::vector<int>& window) {
  const int origin = h.face_id({0, 0});
  if (origin >= 0) return origin;
  if (window.empty()) return 0;
  return *std::min_element(window.begin(), window.end());
}

/// Deterministic core of the resampling move given ξ and the cluster signs.
inline LoopConfig resample_with(const LoopConfig& w, const Blocking& xi, const std::vector<int>& window,
                                const std::vector<std::vector<int>>& clusters, const std::vector<std::int8_t>& signs) {
  const auto split = split_omega(w, xi);
  const auto sigma_bc = dw_inverse(split.free, resample_anchor(w.patch(), window), 1);
  LoopConfig out = dw(w.patch_ptr(), sigma_tilde(sigma_bc, clusters, signs));
  for (int e : split.block.edge_ids()) out.set(e, true);
  return out;
}

/// One ξ-resampling move on the window. Stream fork(0) draws ξ and fork(1)
/// draws the cluster signs.
inline LoopConfig coupled_resample(const LoopConfig& w, const GibbsSpec& spec, const std::vector<int>& window,
                                   const CounterRng& rng) {
  spec.check_boundary(w);
  for (int f : window)
    if (!spec.domain.has_face(f)) throw PreconditionError("resample window must lie inside the domain");
  CounterRng xi_rng = rng.fork(0);
  const auto xi = sample_xi(w, spec.n, spec.x, xi_rng, &spec.domain);
  const auto split = split_omega(w, xi);
  const auto sigma_bc = dw_inverse(split.free, resample_anchor(w.patch(), window), 1);
  LoopConfig out = dw(w.patch_ptr(), sigma_tilde(sigma_bc, xi, window, rng.fork(1)));
  for (int e : split.block.edge_ids()) out.set(e, true);
  return out;
}

inline LoopConfig coupled_resample(const LoopConfig& w, const GibbsSpec& spec, const std::vector<int>& window,
                                   std::uint64_t seed) {
  return coupled_resample(w, spec, window, CounterRng(seed));
}

/// Exact law of coupled_resample(ω) for ω ~ mu. Only coins that can touch
/// the window are enumerated; the others do not change the output.
inline std::map<LoopConfig, double> exact_pushforward(const ExactMeasure<LoopConfig>& mu, const GibbsSpec& spec,
                                                      const std::vector<int>& window) {
  check_blocking_parameters(spec.n, spec.x);
  const HexPatch& h = spec.host();
  std::vector<char> in_window_vertex(h.vertex_count(), 0);
  for (int f : window)
    for (int v : h.face_vertices(f)) in_window_vertex[v] = 1;
  const double p_loop = (spec.n - 1.0) / spec.n;
  const double p_site = 1.0 - spec.x * spec.x;
  std::map<LoopConfig, double> out;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const LoopConfig& w = mu.config(i);
    if (mu.prob(i) == 0.0) continue;
    const auto dec = decompose(w, &spec.domain);
    const auto cand = blocking_candidates(w, dec, &spec.domain);
    std::vector<int> loops, sites;
    for (int l : cand.loops) {
      bool touches = false;
      for (int v : dec.loops[l].vertices) touches = touches || in_window_vertex[v];
      if (touches) loops.push_back(l);
    }
    for (int s : cand.vertices)
      if (in_window_vertex[h.up_vertices()[s]]) sites.push_back(s);
    const int a = static_cast<int>(loops.size());
    const int b = static_cast<int>(sites.size());
    for (std::uint32_t mask = 0; mask < (1u << (a + b)); ++mask) {
      double p = mu.prob(i);
      std::vector<int> ol, os;
      for (int j = 0; j < a; ++j) {
        const bool open = mask >> j & 1;
        p *= open ? p_loop : 1.0 - p_loop;
        if (open) ol.push_back(loops[j]);
      }
      for (int j = 0; j < b; ++j) {
        const bool open = mask >> (a + j) & 1;
        p *= open ? p_site : 1.0 - p_site;
        if (open) os.push_back(sites[j]);
      }
      if (p == 0.0) continue;
      const auto xi = make_blocking(w, dec, ol, os);
      const auto clusters = window_clusters(xi, window);
      const int c = static_cast<int>(clusters.size());
      const double share = p / static_cast<double>(1u << c);
      for (std::uint32_t sm = 0; sm < (1u << c); ++sm) {
        std::vector<std::int8_t> signs(c);
        for (int j = 0; j < c; ++j) signs[j] = sm >> j & 1 ? -1 : 1;
        out[resample_with(w, xi, window, clusters, signs)] += share;
      }
    }
  }
  return out;
}

struct LawReport {
  double n = 0.0;
  double x = 0.0;
  double tv_exact = 0.0;
  double tv_tolerance = 1e-9;
  [[nodiscard]] bool pass() const { return tv_exact <= tv_tolerance; }
  [[nodiscard]] nlohmann::json to_json() const {
    return {{"n", n}, {"x", x}, {"tv_exact", tv_exact}, {"tv_tolerance", tv_tolerance}, {"pass", pass()}};
  }
};

/// Exact TV between the enumerated measure and its image under the move.
template <class Weight = StandardWeight>
LawReport law_preservation(const GibbsSpec& spec, const std::vector<int>& window, double tolerance = 1e-9,
                           Weight wt = {}) {
  const auto mu = enumerate_gibbs(spec, wt);
  return {spec.n, spec.x, total_variation(as_map(mu), exact_pushforward(mu, spec, window)), tolerance};
}

/// (n-1)^{ℓ(ω^block)} (1/x² - 1)^{|ξ \ T↑(ω^block)|}, with empty powers equal to 1.
inline double conditional_weight(const LoopConfig& block, const Blocking& xi, double n, double x) {
  const int loops = static_cast<int>(decompose(block).loops.size());
  int extra = 0;
  for (int v : xi.open_vertices()) extra += block.degree(v) == 0;
  if (loops > 0 && !(n > 1.0)) throw PreconditionError("blocked loops need n > 1");
  if (extra > 0 && !(x < 1.0)) throw PreconditionError("blocked isolated sites need x < 1");
  const double a = loops == 0 ? 1.0 : std::pow(n - 1.0, loops);
  const double b = extra == 0 ? 1.0 : std::pow(1.0 / (x * x) - 1.0, extra);
  return a * b;
}

/// Whether open ξ-sites u and v are joined in the T↑ adjacency restricted to ξ.
inline Clusters xi_clusters(const Blocking& xi) { return clusters(xi.patch->up_graph(), xi.open, 1); }

struct BlockingStats {
  bool crossing = false;        // a Δ(ξ) cluster joins B_r to the outside of B_{2r}
  double largest_fraction = 0;  // largest ξ-cluster over |T↑|
  int open = 0;
};

inline BlockingStats blocking_stats(const Blocking& xi, int r) {
  const HexPatch& h = *xi.patch;
  BlockingStats s;
  s.open = xi.count();
  const auto cl = xi_clusters(xi);
  if (!h.up_vertices().empty()) s.largest_fraction = static_cast<double>(cl.largest()) / h.up_vertices().size();
  auto uf = delta_clusters(xi);
  std::vector<char> inner(h.face_count(), 0), outer(h.face_count(), 0);
  for (int f = 0; f < h.face_count(); ++f) {
    const int root = uf.find(f);
    if (uf.component_size(f) < 2) continue;
    if (detail::in_ball(h.face(f), r)) inner[root] = 1;
    if (!detail::in_ball(h.face(f), 2 * r)) outer[root] = 1;
  }
  for (int f = 0; f < h.face_count(); ++f) s.crossing = s.crossing || (inner[f] && outer[f]);
  return s;
}

}  // namespace hexloop
