#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hexloop/error.hpp"
#include "hexloop/exact_measure.hpp"
#include "hexloop/hex_patch.hpp"
#include "hexloop/rng.hpp"

namespace hexloop {

/// Edge subset of a hexagonal patch in which interior vertices have degree 0
/// or 2; rim vertices may also have degree 1, where strands leave the patch.
class LoopConfig {
 public:
  LoopConfig() = default;
  explicit LoopConfig(std::shared_ptr<const HexPatch> patch)
      : patch_(std::move(patch)), edges_(patch_->edge_count(), 0) {}

  /// Accepts iff every degree is admissible; otherwise throws StructuralError
  /// naming the offending vertex.
  static LoopConfig validate(std::shared_ptr<const HexPatch> patch, const std::vector<int>& edge_ids) {
    LoopConfig c(std::move(patch));
    for (int e : edge_ids) {
      if (e < 0 || e >= c.patch_->edge_count()) throw StructuralError("edge id " + std::to_string(e) + " not in patch");
      c.edges_[e] = 1;
    }
    c.check();
    return c;
  }

  void check() const {
    for (int v = 0; v < patch_->vertex_count(); ++v) {
      const int d = degree(v);
      if (d == 0 || d == 2 || (d == 1 && patch_->is_rim(v))) continue;
      const auto& c = patch_->vertex(v);
      throw StructuralError("vertex " + std::to_string(v) + " (" + (c.up ? "UP" : "DOWN") + " " + std::to_string(c.k) +
                            "," + std::to_string(c.l) + ") has degree " + std::to_string(d));
    }
  }

  [[nodiscard]] const HexPatch& patch() const { return *patch_; }
  [[nodiscard]] const std::shared_ptr<const HexPatch>& patch_ptr() const { return patch_; }
  [[nodiscard]] bool has(int e) const { return edges_[e] != 0; }
  void toggle(int e) { edges_[e] ^= 1; }
  void set(int e, bool on) { edges_[e] = on; }
  [[nodiscard]] const std::vector<std::uint8_t>& bits() const { return edges_; }

  [[nodiscard]] int degree(int v) const {
    int d = 0;
    for (int e : patch_->vertex_edges(v)) d += edges_[e];
    return d;
  }

  [[nodiscard]] int size() const { return static_cast<int>(std::count(edges_.begin(), edges_.end(), 1)); }

  [[nodiscard]] std::vector<int> edge_ids() const {
    std::vector<int> out;
    for (int e = 0; e < static_cast<int>(edges_.size()); ++e)
      if (edges_[e]) out.push_back(e);
    return out;
  }

  /// Symmetric difference with the hexagon of face f.
  void flip_face(int f) {
    for (int e : patch_->face_edges(f)) edges_[e] ^= 1;
  }

  friend bool operator==(const LoopConfig& a, const LoopConfig& b) { return a.edges_ == b.edges_; }
  friend bool operator<(const LoopConfig& a, const LoopConfig& b) { return a.edges_ < b.edges_; }

 private:
  std::shared_ptr<const HexPatch> patch_;
  std::vector<std::uint8_t> edges_;
};

/// One connected component of a loop configuration.
struct LoopComponent {
  std::vector<int> vertices;  // in traversal order
  std::vector<int> edges;
  bool cycle = false;
};

struct LoopDecomposition {
  std::vector<LoopComponent> loops;
  std::vector<LoopComponent> paths;
  int ell = 0;  // loops meeting V(Ω)
  /// Component index per vertex: loops are 0..L-1, paths L.., -1 if unused.
  std::vector<int> component_of;
};

/// Traces the components of ω in order of smallest vertex. Paths are traced
/// from one endpoint to the other.
inline LoopDecomposition decompose(const LoopConfig& w, const Domain* domain = nullptr) {
  const HexPatch& h = w.patch();
  LoopDecomposition out;
  std::vector<int> comp(h.vertex_count(), -1);
  std::vector<LoopComponent> comps;
  auto trace = [&](int start, int id) {
    LoopComponent c;
    int prev_edge = -1;
    int v = start;
    for (;;) {
      comp[v] = id;
      c.vertices.push_back(v);
      int next_edge = -1;
      for (int e : h.vertex_edges(v))
        if (w.has(e) && e != prev_edge) {
          next_edge = e;
          break;
        }
      if (next_edge < 0) break;
      const int u = h.edge(next_edge).other(v);
      c.edges.push_back(next_edge);
      if (u == start) {
        c.cycle = true;
        break;
      }
      prev_edge = next_edge;
      v = u;
    }
    return c;
  };
  // Paths first from their endpoints so they are traced whole.
  std::vector<std::pair<int, LoopComponent>> traced;
  for (int v = 0; v < h.vertex_count(); ++v)
    if (comp[v] < 0 && w.degree(v) == 1) {
      const int id = static_cast<int>(traced.size());
      traced.emplace_back(v, trace(v, id));
    }
  for (int v = 0; v < h.vertex_count(); ++v)
    if (comp[v] < 0 && w.degree(v) == 2) {
      const int id = static_cast<int>(traced.size());
      traced.emplace_back(v, trace(v, id));
    }
  // Order components by smallest vertex.
  std::vector<int> order(traced.size());
  std::vector<int> min_vertex(traced.size());
  for (std::size_t i = 0; i < traced.size(); ++i) {
    order[i] = static_cast<int>(i);
    min_vertex[i] = *std::min_element(traced[i].second.vertices.begin(), traced[i].second.vertices.end());
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) { return min_vertex[a] < min_vertex[b]; });
  std::vector<int> relabel(traced.size());
  for (int i : order) {
    auto& c = traced[i].second;
    if (c.cycle) {
      relabel[i] = static_cast<int>(out.loops.size());
      out.loops.push_back(std::move(c));
    } else {
      relabel[i] = -1 - static_cast<int>(out.paths.size());
      out.paths.push_back(std::move(c));
    }
  }
  const int nl = static_cast<int>(out.loops.size());
  out.component_of.assign(h.vertex_count(), -1);
  for (int v = 0; v < h.vertex_count(); ++v)
    if (comp[v] >= 0) {
      const int r = relabel[comp[v]];
      out.component_of[v] = r >= 0 ? r : nl + (-1 - r);
    }
  for (const auto& l : out.loops) {
    bool meets = domain == nullptr;
    for (int v : l.vertices)
      if (!meets && domain->has_vertex(v)) meets = true;
    out.ell += meets;
  }
  return out;
}

/// Loop O(n) specification on a domain with frozen boundary condition.
struct GibbsSpec {
  Domain domain;
  double n = 1.0;
  double x = 1.0;
  LoopConfig boundary;

  GibbsSpec() = default;
  GibbsSpec(Domain d, double n_, double x_, LoopConfig omega_prime)
      : domain(std::move(d)), n(n_), x(x_), boundary(std::move(omega_prime)) {
    if (!(n > 0.0)) throw RangeError("loop weight n must be positive");
    if (!(x > 0.0)) throw RangeError("edge weight x must be positive");
    if (boundary.patch_ptr() != domain.host_ptr()) throw StructuralError("boundary condition lives on another patch");
    if (!domain.has_margin()) throw StructuralError("every face adjacent to the domain must lie in the host patch");
    boundary.check();
  }

  /// Ω = B_r inside the host B_{r+2} with empty boundary condition.
  static GibbsSpec ball(int r, double n, double x) {
    auto host = std::make_shared<const HexPatch>(HexPatch::ball(r + 2));
    Domain d(host, HexPatch::ball(r).faces());
    LoopConfig empty(host);
    return {std::move(d), n, x, std::move(empty)};
  }

  [[nodiscard]] const HexPatch& host() const { return domain.host(); }
  [[nodiscard]] const std::shared_ptr<const HexPatch>& host_ptr() const { return domain.host_ptr(); }

  /// Number of edges of ω inside E(Ω).
  [[nodiscard]] int inner_edges(const LoopConfig& w) const {
    int c = 0;
    for (int e : domain.edges()) c += w.has(e);
    return c;
  }

  void check_boundary(const LoopConfig& w) const {
    if (w.patch_ptr() != host_ptr()) throw PreconditionError("configuration lives on another patch");
    for (int e = 0; e < host().edge_count(); ++e)
      if (!domain.has_edge(e) && w.has(e) != boundary.has(e))
        throw PreconditionError("configuration differs from the boundary condition outside E(Omega)");
  }
};

/// log(n^ℓ x^e).
struct StandardWeight {
  double operator()(const GibbsSpec& spec, int loops, int edges) const {
    return loops * std::log(spec.n) + edges * std::log(spec.x);
  }
};

template <class Weight = StandardWeight>
double log_weight(const LoopConfig& w, const GibbsSpec& spec, Weight weight = {}) {
  spec.check_boundary(w);
  return weight(spec, decompose(w, &spec.domain).ell, spec.inner_edges(w));
}

template <class Weight = StandardWeight>
double weight(const LoopConfig& w, const GibbsSpec& spec, Weight wt = {}) {
  return std::exp(log_weight(w, spec, wt));
}

/// Maximum domain size accepted by enumerate_gibbs.
inline constexpr int kEnumerationFaceLimit = 20;

/// Exact Gibbs measure over ω' ⊕ ∂S for all face sets S ⊆ Ω, visited in
/// Gray-code order starting from ω'.
template <class Weight = StandardWeight>
ExactMeasure<LoopConfig> enumerate_gibbs(const GibbsSpec& spec, Weight wt = {}) {
  const auto& faces = spec.domain.faces();
  const int m = static_cast<int>(faces.size());
  if (m > kEnumerationFaceLimit)
    throw RangeError("domain has " + std::to_string(m) + " faces; exact enumeration is limited to " +
                     std::to_string(kEnumerationFaceLimit) + ", use the Metropolis sampler instead");
  std::vector<LoopConfig> configs;
  std::vector<double> logw;
  const std::uint64_t total = std::uint64_t{1} << m;
  configs.reserve(total);
  logw.reserve(total);
  LoopConfig cur = spec.boundary;
  for (std::uint64_t i = 0; i < total; ++i) {
    if (i > 0) cur.flip_face(faces[std::countr_zero(i)]);
    logw.push_back(wt(spec, decompose(cur, &spec.domain).ell, spec.inner_edges(cur)));
    configs.push_back(cur);
  }
  return ExactMeasure<LoopConfig>::from_log_weights(std::move(configs), logw);
}

/// Flip of a domain face; faces outside Ω would change the boundary condition.
inline LoopConfig face_flip(const LoopConfig& w, const Domain& domain, int f) {
  if (!domain.has_face(f)) throw PreconditionError("face " + std::to_string(f) + " is outside the domain");
  LoopConfig out = w;
  out.flip_face(f);
  return out;
}

/// Loops through the corners of face f, counted once each, by walking
/// each component from a corner until it closes up or ends.
class LocalLoopCounter {
 public:
  explicit LocalLoopCounter(const HexPatch& h) : mark_(h.vertex_count(), 0) {}

  int loops_at_face(const LoopConfig& w, int f) {
    const HexPatch& h = w.patch();
    ++stamp_;
    int loops = 0;
    for (int start : h.face_vertices(f)) {
      if (mark_[start] == stamp_ || w.degree(start) != 2) continue;
      int prev_edge = -1;
      int v = start;
      bool closed = false;
      for (;;) {
        mark_[v] = stamp_;
        int next_edge = -1;
        for (int e : h.vertex_edges(v))
          if (w.has(e) && e != prev_edge) {
            next_edge = e;
            break;
          }
        if (next_edge < 0) break;
        const int u = h.edge(next_edge).other(v);
        if (u == start) {
          closed = true;
          break;
        }
        prev_edge = next_edge;
        v = u;
      }
      loops += closed;
    }
    return loops;
  }

 private:
  std::vector<std::uint32_t> mark_;
  std::uint32_t stamp_ = 0;
};

struct ChainDiagnostics {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  [[nodiscard]] double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

/// Face-flip Metropolis chain for the loop O(n) measure. One sweep is
/// |faces(Ω)| proposals of a uniform face, accepted with probability
/// min(1, n^{Δℓ} x^{Δe}).
class LoopChain {
 public:
  LoopChain(const GibbsSpec& spec, LoopConfig start, std::uint64_t seed)
      : spec_(&spec), state_(std::move(start)), rng_(seed), counter_(spec.host()), log_n_(std::log(spec.n)),
        log_x_(std::log(spec.x)) {
    state_.check();
    spec.check_boundary(state_);
  }

  /// Metropolis acceptance of flipping face f from configuration w.
  [[nodiscard]] double acceptance(const LoopConfig& w, int f) {
    LoopConfig tmp = w;
    return std::min(1.0, std::exp(log_ratio(tmp, f)));
  }

  void step() {
    const auto& faces = spec_->domain.faces();
    const int f = faces[rng_.below(faces.size())];
    const double u = rng_.uniform01();
    const double lr = log_ratio(state_, f);  // leaves state_ flipped
    ++diag_.proposals;
    if (lr >= 0.0 || u < std::exp(lr)) {
      ++diag_.accepted;
    } else {
      state_.flip_face(f);
    }
  }

  void sweep(int count = 1) {
    const auto proposals = static_cast<std::int64_t>(count) * spec_->domain.face_count();
    for (std::int64_t i = 0; i < proposals; ++i) step();
  }

  /// `sweeps` sweeps plus one proposal when that total is even, so samples
  /// alternate parity classes when every flip is accepted (n = x = 1).
  void decorrelate(int sweeps) {
    sweep(sweeps);
    if (static_cast<std::int64_t>(sweeps) * spec_->domain.face_count() % 2 == 0) step();
  }

  [[nodiscard]] const LoopConfig& state() const { return state_; }
  [[nodiscard]] const ChainDiagnostics& diagnostics() const { return diag_; }

 private:
  // Flips f in w and returns the log weight ratio new/old.
  double log_ratio(LoopConfig& w, int f) {
    const HexPatch& h = w.patch();
    int covered = 0;
    for (int e : h.face_edges(f)) covered += w.has(e);
    const int de = 6 - 2 * covered;
    int dl = 0;
    if (spec_->n != 1.0) {
      dl -= counter_.loops_at_face(w, f);
      w.flip_face(f);
      dl += counter_.loops_at_face(w, f);
    } else {
      w.flip_face(f);
    }
    return (dl != 0 ? dl * log_n_ : 0.0) + de * log_x_;
  }

  const GibbsSpec* spec_;
  LoopConfig state_;
  CounterRng rng_;
  LocalLoopCounter counter_;
  double log_n_;
  double log_x_;
  ChainDiagnostics diag_;
};

struct ChainRun {
  LoopConfig state;
  ChainDiagnostics diagnostics;
};

inline ChainRun metropolis_chain(const GibbsSpec& spec, const LoopConfig& start, int sweeps, std::uint64_t seed) {
  LoopChain chain(spec, start, seed);
  chain.sweep(sweeps);
  return {chain.state(), chain.diagnostics()};
}

/// Loops of ω surrounding face coordinate f.
inline int loops_around(const LoopConfig& w, FaceCoord f) {
  int count = 0;
  for (const auto& l : decompose(w).loops) count += surrounds_edges(w.patch(), l.edges, f);
  return count;
}

/// x_c(n) = 1/√(2 + √(2 - n)).
inline double x_critical(double n) {
  if (!(n >= 0.0 && n <= 2.0)) throw RangeError("x_critical needs 0 <= n <= 2");
  return 1.0 / std::sqrt(2.0 + std::sqrt(2.0 - n));
}

/// Whether ω has a loop with every edge in E(A_k) surrounding face (0,0).
inline bool annulus_loop(const LoopConfig& w, int k) {
  const HexPatch& h = w.patch();
  std::vector<char> in_annulus(h.edge_count(), 0);
  for (const auto& c : annulus(k)) {
    const int f = h.face_id(c);
    if (f < 0) continue;
    for (int e : h.face_edges(f)) in_annulus[e] = 1;
  }
  for (const auto& l : decompose(w).loops) {
    bool inside = true;
    for (int e : l.edges) inside = inside && in_annulus[e];
    if (inside && surrounds_edges(h, l.edges, {0, 0})) return true;
  }
  return false;
}

/// Wilson score interval.
struct Proportion {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 1.0;
  long successes = 0;
  long trials = 0;
};

inline constexpr double kZ95 = 1.959963984540054;

inline Proportion wilson_interval(long successes, long trials, double z = kZ95) {
  Proportion p;
  p.successes = successes;
  p.trials = trials;
  if (trials == 0) return p;
  const double nn = static_cast<double>(trials);
  const double ph = successes / nn;
  const double z2 = z * z;
  const double centre = (ph + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(ph * (1 - ph) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  p.estimate = ph;
  p.lo = std::max(0.0, centre - half);
  p.hi = std::min(1.0, centre + half);
  return p;
}

struct RswOptions {
  long samples = 2000;
  int burnin = 1000;
  int gap = 10;
  std::optional<LoopConfig> start;
};

struct RswResult {
  int k = 0;
  Proportion probability;
  bool supported = false;  // n x^2 <= 1
  ChainDiagnostics diagnostics;
};

/// Annulus spec: Ω = B_{2k} inside B_{2k+2}, empty boundary.
inline GibbsSpec rsw_spec(int k, double n, double x) {
  if (k < 1) throw RangeError("annulus index k must be positive");
  return GibbsSpec::ball(2 * k, n, x);
}

/// Monte Carlo probability of a loop in A_k surrounding the origin face.
inline RswResult rsw_estimate(const GibbsSpec& spec, int k, std::uint64_t seed, const RswOptions& opt = {}) {
  if (opt.samples < 1) throw RangeError("sample count must be positive");
  LoopChain chain(spec, opt.start ? *opt.start : spec.boundary, seed);
  chain.sweep(opt.burnin);
  long hits = 0;
  for (long s = 0; s < opt.samples; ++s) {
    chain.decorrelate(opt.gap);
    hits += annulus_loop(chain.state(), k);
  }
  RswResult r;
  r.k = k;
  r.probability = wilson_interval(hits, opt.samples);
  r.supported = spec.n * spec.x * spec.x <= 1.0;
  r.diagnostics = chain.diagnostics();
  return r;
}

/// Configuration from a JSON edge-id list.
inline LoopConfig loop_config_from_json(std::shared_ptr<const HexPatch> patch, const nlohmann::json& j) {
  return LoopConfig::validate(std::move(patch), j.get<std::vector<int>>());
}

}  // namespace hexloop
