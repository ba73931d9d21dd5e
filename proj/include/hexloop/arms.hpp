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

#include <json.hpp>

#include "hexloop/error.hpp"
#include "hexloop/graph.hpp"
#include "hexloop/percolation.hpp"
#include "hexloop/planar.hpp"
#include "hexloop/rng.hpp"

namespace hexloop {

/// Split of the ordered cut set S = (v_1, ..., v_L) into 2k cyclic arcs
/// Arc_j = {v_{i_{j-1}+1}, ..., v_{i_j}} with i_0 := i_{2k}. Indices are
/// 1-based as in v_1..v_L.
struct ArcDecomposition {
  std::vector<int> cut;     // S in boundary order
  std::vector<int> splits;  // i_1 < ... < i_2k
  std::vector<char> borderline;  // per arc, set when the bound holds only within 2 standard errors

  ArcDecomposition() = default;
  ArcDecomposition(std::vector<int> s, std::vector<int> idx) : cut(std::move(s)), splits(std::move(idx)) {
    validate();
    borderline.assign(splits.size(), 0);
  }

  [[nodiscard]] int arc_count() const { return static_cast<int>(splits.size()); }

  void validate() const {
    const int l = static_cast<int>(cut.size());
    if (splits.empty()) throw StructuralError("arc decomposition needs at least one split");
    for (std::size_t j = 0; j < splits.size(); ++j) {
      if (splits[j] < 1 || splits[j] > l) throw StructuralError("split index outside 1..L");
      if (j > 0 && splits[j] <= splits[j - 1]) throw StructuralError("split indices must increase");
    }
  }

  /// Arc j (0-based j, arc j+1 in the 1-based notation) as cut-set vertices.
  [[nodiscard]] std::vector<int> arc(int j) const {
    const int l = static_cast<int>(cut.size());
    const int m = arc_count();
    const int end = splits[j];
    const int begin = splits[(j + m - 1) % m];  // previous split, cyclically
    std::vector<int> out;
    int i = begin;
    do {
      i = i % l + 1;
      out.push_back(cut[i - 1]);
    } while (i != end);
    return out;
  }

  [[nodiscard]] std::vector<std::vector<int>> arcs() const {
    std::vector<std::vector<int>> out;
    for (int j = 0; j < arc_count(); ++j) out.push_back(arc(j));
    return out;
  }

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"cut", cut}, {"splits", splits}, {"borderline", std::vector<int>(borderline.begin(), borderline.end())}};
  }
};

/// Vertices outside Ω_n in the given state that reach the outer vertex set
/// through such vertices.
inline std::vector<char> reach_outer(const Graph& g, const CutSet& cut, const std::vector<int>& outer,
                                     const SiteConfig& cfg, std::uint8_t state) {
  std::vector<char> seen(g.size(), 0);
  std::deque<int> q;
  for (int v : outer)
    if (cut.outside(v) && cfg[v] == state && !seen[v]) {
      seen[v] = 1;
      q.push_back(v);
    }
  while (!q.empty()) {
    const int v = q.front();
    q.pop_front();
    for (int w : g.neighbors(v))
      if (!seen[w] && cut.outside(w) && cfg[w] == state) {
        seen[w] = 1;
        q.push_back(w);
      }
  }
  return seen;
}

/// Per cut-set vertex: whether it starts a state-path to the outer set whose
/// other vertices lie outside Ω_n.
inline std::vector<char> arm_starts(const Graph& g, const CutSet& cut, const std::vector<int>& outer,
                                    const SiteConfig& cfg, std::uint8_t state) {
  const auto reach = reach_outer(g, cut, outer, cfg, state);
  std::vector<char> is_outer(g.size(), 0);
  for (int v : outer) is_outer[v] = 1;
  std::vector<char> out(cut.cut.size(), 0);
  for (std::size_t i = 0; i < cut.cut.size(); ++i) {
    const int v = cut.cut[i];
    if (cfg[v] != state) continue;
    if (is_outer[v]) out[i] = 1;
    for (int w : g.neighbors(v))
      if (reach[w]) out[i] = 1;
  }
  return out;
}

/// Monte Carlo table of p̂_{i,j}: the fraction of samples in which no vertex of
/// {v_i, ..., v_j} connects to the outer set within the complement of Ω_n.
class PijTable {
 public:
  PijTable() = default;

  /// Per-sample connection bitsets over the cut set.
  PijTable(int length, std::vector<std::vector<char>> connected)
      : length_(length), samples_(std::move(connected)) {}

  /// Table with prescribed values; values[i-1][j-1] is p_{i,j}.
  static PijTable from_values(int length, std::vector<std::vector<double>> values) {
    PijTable t;
    t.length_ = length;
    t.fixed_ = std::move(values);
    return t;
  }

  [[nodiscard]] int length() const { return length_; }
  [[nodiscard]] int sample_count() const { return static_cast<int>(samples_.size()); }

  /// p̂_{i,j} for 1 <= i <= j <= L.
  [[nodiscard]] double p(int i, int j) const {
    check(i, j);
    if (!fixed_.empty()) return fixed_[i - 1][j - 1];
    if (samples_.empty()) throw PreconditionError("empty p-table");
    long miss = 0;
    for (const auto& s : samples_) {
      bool any = false;
      for (int v = i - 1; v < j && !any; ++v) any = s[v] != 0;
      miss += !any;
    }
    return static_cast<double>(miss) / static_cast<double>(samples_.size());
  }

  [[nodiscard]] double standard_error(int i, int j) const {
    if (!fixed_.empty()) return 0.0;
    const double q = p(i, j);
    return std::sqrt(q * (1.0 - q) / static_cast<double>(samples_.size()));
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json prefix = nlohmann::json::array();
    for (int i = 1; i <= length_; ++i) prefix.push_back(p(1, i));
    return {{"length", length_}, {"samples", sample_count()}, {"prefix_row", prefix}};
  }

 private:
  void check(int i, int j) const {
    if (i < 1 || j > length_ || i > j) throw RangeError("p-table index out of range");
  }

  int length_ = 0;
  std::vector<std::vector<char>> samples_;
  std::vector<std::vector<double>> fixed_;
};

/// Estimates the open-arm table from N sampled configurations; sample s is
/// drawn from rng stream fork(s).
template <class Sampler>
PijTable estimate_pij(const Graph& g, const CutSet& cut, const std::vector<int>& outer, Sampler&& sampler, int n,
                      std::uint64_t seed, std::uint8_t state = 1) {
  if (n < 1) throw RangeError("sample count must be positive");
  const CounterRng base(seed);
  std::vector<std::vector<char>> rows;
  rows.reserve(n);
  for (int s = 0; s < n; ++s) {
    CounterRng rng = base.fork(static_cast<std::uint64_t>(s));
    const SiteConfig cfg = sampler(rng);
    rows.push_back(arm_starts(g, cut, outer, cfg, state));
  }
  return PijTable(cut.size(), std::move(rows));
}

struct ArcSplit {
  int index = 0;          // i*, 1-based
  bool premise = false;   // whether the last entry is below ε
};

/// i* = min{i : row_i < √(2ε)}, 1-based. Throws when no entry qualifies.
inline ArcSplit arc_split(const std::vector<double>& row, double eps) {
  if (row.empty()) throw PreconditionError("empty row");
  if (!(eps > 0.0)) throw RangeError("epsilon must be positive");
  for (std::size_t i = 1; i < row.size(); ++i)
    if (row[i] > row[i - 1] + 1e-12) throw PreconditionError("row is not non-increasing");
  const double threshold = std::sqrt(2.0 * eps);
  for (std::size_t i = 0; i < row.size(); ++i)
    if (row[i] < threshold) return {static_cast<int>(i) + 1, row.back() < eps};
  throw PreconditionError("one-arm estimate too weak");
}

/// Greedy split into 2k arcs with p̂ ≤ ε/4k per arc.
inline ArcDecomposition iterated_split(const PijTable& table, const std::vector<int>& cut, double eps, int k) {
  if (k < 1) throw RangeError("k must be positive");
  if (!(eps > 0.0)) throw RangeError("epsilon must be positive");
  const int l = table.length();
  if (static_cast<int>(cut.size()) != l) throw StructuralError("table length differs from cut-set size");
  const double floor_bound = std::pow(eps / (8.0 * k), 2 * k);
  if (!(table.p(1, l) < floor_bound)) throw PreconditionError("insufficient one-arm probability");
  const double per_arc = eps / (4.0 * k);
  std::vector<int> splits;
  std::vector<char> border;
  int prev = 0;
  for (int j = 0; j < 2 * k; ++j) {
    int chosen = -1;
    for (int i = prev + 1; i <= l; ++i)
      if (table.p(prev + 1, i) <= per_arc) {
        chosen = i;
        break;
      }
    if (chosen < 0) throw PreconditionError("insufficient one-arm probability");
    border.push_back(table.p(prev + 1, chosen) + 2.0 * table.standard_error(prev + 1, chosen) > per_arc);
    splits.push_back(chosen);
    prev = chosen;
  }
  ArcDecomposition out(cut, splits);
  out.borderline = border;
  for (int j = 0; j < 2 * k; ++j) {
    const int begin = j == 0 ? 1 : splits[j - 1] + 1;
    if (table.p(begin, splits[j]) > per_arc) throw Error("arc bound violated after split");
  }
  return out;
}

/// Every arc reaches the outer set within Ω_n^c by an open and by a closed path.
inline bool arm_event(const Graph& g, const SiteConfig& cfg, const CutSet& cut, const ArcDecomposition& arcs,
                      const std::vector<int>& outer) {
  const auto open = arm_starts(g, cut, outer, cfg, 1);
  const auto closed = arm_starts(g, cut, outer, cfg, 0);
  std::vector<int> pos(g.size(), -1);
  for (std::size_t i = 0; i < cut.cut.size(); ++i) pos[cut.cut[i]] = static_cast<int>(i);
  for (const auto& a : arcs.arcs()) {
    bool has_open = false, has_closed = false;
    for (int v : a) {
      has_open = has_open || open[pos[v]];
      has_closed = has_closed || closed[pos[v]];
    }
    if (!has_open || !has_closed) return false;
  }
  return true;
}

/// Number of state-clusters meeting both vertex sets.
inline int crossing_components(const Graph& g, const SiteConfig& cfg, const std::vector<int>& inner,
                               const std::vector<int>& outer, std::uint8_t state) {
  const auto cl = clusters(g, cfg, state);
  std::vector<char> in_inner(cl.count(), 0), in_outer(cl.count(), 0);
  for (int v : inner)
    if (cl.label[v] >= 0) in_inner[cl.label[v]] = 1;
  for (int v : outer)
    if (cl.label[v] >= 0) in_outer[cl.label[v]] = 1;
  int count = 0;
  for (int c = 0; c < cl.count(); ++c) count += in_inner[c] && in_outer[c];
  return count;
}

/// Cyclic split of the cut set into at least 2k arcs on which both σ and τ
/// have all four arm types, searched greedily from every starting offset.
inline std::optional<ArcDecomposition> find_arm_arcs(const Graph& g, const SiteConfig& sigma, const SiteConfig& tau,
                                                     const CutSet& cut, const std::vector<int>& outer, int k) {
  const int l = cut.size();
  if (l < 2 * k) return std::nullopt;
  const std::array<std::vector<char>, 4> kinds{arm_starts(g, cut, outer, sigma, 1), arm_starts(g, cut, outer, sigma, 0),
                                               arm_starts(g, cut, outer, tau, 1), arm_starts(g, cut, outer, tau, 0)};
  for (int start = 0; start < l; ++start) {
    std::vector<int> ends;  // 0-based positions of arc ends
    unsigned have = 0;
    for (int t = 0; t < l; ++t) {
      const int i = (start + t) % l;
      for (int c = 0; c < 4; ++c)
        if (kinds[c][i]) have |= 1u << c;
      if (have == 0xFu) {
        ends.push_back(i);
        have = 0;
      }
    }
    if (static_cast<int>(ends.size()) < 2 * k) continue;
    // Surplus arcs and the unfinished tail merge into the last full arc.
    ends.resize(2 * k);
    ends.back() = (start + l - 1) % l;
    std::vector<int> splits;
    for (int e : ends) splits.push_back(e + 1);
    std::sort(splits.begin(), splits.end());
    return ArcDecomposition(cut.cut, splits);
  }
  return std::nullopt;
}

struct CatalanResult {
  int k = 0;
  int c_open = 0;    // open crossing clusters of σ
  int c_closed = 0;  // closed crossing clusters of τ
  [[nodiscard]] bool ok() const { return c_open + c_closed >= k + 1; }
};

/// C(σ, open) + C(τ, closed) ≥ k + 1 for σ ≤ τ both in the arm event.
inline CatalanResult catalan_check(const Graph& g, const SiteConfig& sigma, const SiteConfig& tau, const CutSet& cut,
                                   const ArcDecomposition& arcs, const std::vector<int>& outer) {
  if (arcs.arc_count() % 2 != 0) throw PreconditionError("arc count must be even");
  for (int v = 0; v < g.size(); ++v)
    if (sigma[v] > tau[v]) throw PreconditionError("configurations are not ordered: sigma exceeds tau");
  if (!arm_event(g, sigma, cut, arcs, outer)) throw PreconditionError("sigma is not in the arm event");
  if (!arm_event(g, tau, cut, arcs, outer)) throw PreconditionError("tau is not in the arm event");
  CatalanResult r;
  r.k = arcs.arc_count() / 2;
  r.c_open = crossing_components(g, sigma, cut.cut, outer, 1);
  r.c_closed = crossing_components(g, tau, cut.cut, outer, 0);
  return r;
}

}  // namespace hexloop
