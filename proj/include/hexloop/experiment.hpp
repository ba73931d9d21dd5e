#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hexloop/arms.hpp"
#include "hexloop/coupling.hpp"
#include "hexloop/error.hpp"
#include "hexloop/exact_measure.hpp"
#include "hexloop/hex_patch.hpp"
#include "hexloop/loop_model.hpp"
#include "hexloop/percolation.hpp"
#include "hexloop/planar.hpp"
#include "hexloop/rng.hpp"

#ifndef HEXLOOP_BUILD_ID
#define HEXLOOP_BUILD_ID "unknown"
#endif

namespace hexloop {

/// Seed of chain or task `index` under a master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  CounterRng r = CounterRng(seed).fork(index);
  return r();
}

/// Runs fn(0..count-1) on up to `threads` workers; results are stored by
/// index so the output does not depend on scheduling.
template <class R, class F>
std::vector<R> parallel_map(int count, int threads, F&& fn) {
  std::vector<R> out(std::max(count, 0));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int t = std::clamp(threads, 1, std::max(count, 1));
  std::vector<std::thread> pool;
  for (int i = 1; i < t; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Comma-separated table with full-precision numbers.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { line(header); }

  Csv& row(const std::vector<std::string>& cells) {
    line(cells);
    return *this;
  }
  static std::string num(double v) { return format_double(v); }
  static std::string num(long long v) { return std::to_string(v); }
  static std::string num(int v) { return std::to_string(v); }
  static std::string num(long v) { return std::to_string(v); }
  static std::string num(std::uint64_t v) { return std::to_string(v); }

  [[nodiscard]] const std::string& str() const { return text_; }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }
  std::string text_;
};

struct ExperimentConfig {
  std::string command = "check";
  double n = 1.0;
  double x = 1.0;
  double p = 0.5;
  int r = 1;
  int k = 2;
  int window = 0;
  int cut = 1;
  std::optional<std::uint64_t> seed;
  int sweeps = 10;
  int burnin = 1000;
  long samples = 1000;
  int chains = 1;
  int threads = 1;
  std::optional<std::vector<int>> boundary;  // empty boundary when absent
  std::vector<double> grid_n;
  std::vector<double> grid_x;
  std::vector<int> grid_k;
  double eps = 0.05;
  double scale = 1.0;
  std::map<std::string, double> tolerances;
  std::string out;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

  void validate() const {
    static const std::set<std::string> commands{"enumerate", "sample",    "rsw",    "blocking",
                                                "arms",      "trifurcation", "couple", "check"};
    if (!commands.count(command)) throw RangeError("unknown command '" + command + "'");
    if (!(n > 0.0) || !std::isfinite(n)) throw RangeError("n must be positive");
    if (!(x > 0.0) || !std::isfinite(x)) throw RangeError("x must be positive");
    if (!(p >= 0.0 && p <= 1.0)) throw RangeError("p must lie in [0, 1]");
    if (r < 0) throw RangeError("r must be nonnegative");
    if (k < 0) throw RangeError("k must be nonnegative");
    if (window < 0) throw RangeError("window must be nonnegative");
    if (cut < 0) throw RangeError("cut must be nonnegative");
    if (sweeps < 1) throw RangeError("sweeps must be positive");
    if (burnin < 0) throw RangeError("burnin must be nonnegative");
    if (samples < 1) throw RangeError("samples must be positive");
    if (chains < 1) throw RangeError("chains must be positive");
    if (threads < 1) throw RangeError("threads must be positive");
    for (double v : grid_n)
      if (!(v > 0.0)) throw RangeError("grid_n entries must be positive");
    for (double v : grid_x)
      if (!(v > 0.0)) throw RangeError("grid_x entries must be positive");
    for (int v : grid_k)
      if (v < 0) throw RangeError("grid_k entries must be nonnegative");
    if (!(eps > 0.0)) throw RangeError("eps must be positive");
    if (!(scale > 0.0)) throw RangeError("scale must be positive");
    for (const auto& [name, t] : tolerances)
      if (!(t >= 0.0)) throw RangeError("tolerance '" + name + "' must be nonnegative");
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j{{"command", command}, {"n", n},           {"x", x},           {"p", p},
                     {"r", r},             {"k", k},           {"window", window}, {"cut", cut},
                     {"sweeps", sweeps},   {"burnin", burnin}, {"samples", samples}, {"chains", chains},
                     {"threads", threads}, {"grid_n", grid_n}, {"grid_x", grid_x}, {"grid_k", grid_k},
                     {"eps", eps},         {"scale", scale},   {"tolerances", tolerances}, {"out", out}};
    j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
    j["boundary"] = boundary ? nlohmann::json(*boundary) : nlohmann::json("empty");
    return j;
  }

  static ExperimentConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw RangeError("configuration must be a JSON object");
    ExperimentConfig c;
    try {
      for (const auto& [key, v] : j.items()) {
        if (key == "command") c.command = v.get<std::string>();
        else if (key == "n") c.n = v.get<double>();
        else if (key == "x") c.x = v.get<double>();
        else if (key == "p") c.p = v.get<double>();
        else if (key == "r") c.r = v.get<int>();
        else if (key == "k") c.k = v.get<int>();
        else if (key == "window") c.window = v.get<int>();
        else if (key == "cut") c.cut = v.get<int>();
        else if (key == "seed") {
          if (v.is_null()) c.seed.reset();
          else if (v.is_number_unsigned()) c.seed = v.get<std::uint64_t>();
          else throw RangeError("seed must be an unsigned 64-bit integer");
        }
        else if (key == "sweeps") c.sweeps = v.get<int>();
        else if (key == "burnin") c.burnin = v.get<int>();
        else if (key == "samples") c.samples = v.get<long>();
        else if (key == "chains") c.chains = v.get<int>();
        else if (key == "threads") c.threads = v.get<int>();
        else if (key == "boundary") {
          if (v.is_string() && v.get<std::string>() == "empty") c.boundary.reset();
          else c.boundary = v.get<std::vector<int>>();
        }
        else if (key == "grid_n") c.grid_n = v.get<std::vector<double>>();
        else if (key == "grid_x") c.grid_x = v.get<std::vector<double>>();
        else if (key == "grid_k") c.grid_k = v.get<std::vector<int>>();
        else if (key == "eps") c.eps = v.get<double>();
        else if (key == "scale") c.scale = v.get<double>();
        else if (key == "tolerances") c.tolerances = v.get<std::map<std::string, double>>();
        else if (key == "out") c.out = v.get<std::string>();
        else throw RangeError("unknown configuration key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw RangeError(std::string("malformed configuration: ") + e.what());
    }
    c.validate();
    return c;
  }

  static ExperimentConfig parse(const std::string& text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw RangeError(std::string("configuration is not valid JSON: ") + e.what());
    }
    return from_json(j);
  }

  [[nodiscard]] std::string emit() const { return to_json().dump(2); }

  [[nodiscard]] std::uint64_t require_seed() const {
    if (!seed) throw RangeError("--seed is required for command '" + command + "'");
    return *seed;
  }

  [[nodiscard]] double tolerance(const std::string& name, double fallback) const {
    const auto it = tolerances.find(name);
    return it == tolerances.end() ? fallback : it->second;
  }

  [[nodiscard]] std::vector<double> ns() const { return grid_n.empty() ? std::vector<double>{n} : grid_n; }
  [[nodiscard]] std::vector<double> xs() const { return grid_x.empty() ? std::vector<double>{x} : grid_x; }
  [[nodiscard]] std::vector<int> ks() const { return grid_k.empty() ? std::vector<int>{k} : grid_k; }
};

struct StatRow {
  std::string name;
  std::string estimator;
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  long n_samples = 0;
  std::uint64_t seed = 0;

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"name", name}, {"estimator", estimator}, {"value", value}, {"ci_lo", ci_lo},
            {"ci_hi", ci_hi}, {"n_samples", n_samples}, {"seed", seed}};
  }
};

/// Outcome of one invariant. Exact checks compare deterministic quantities;
/// statistical checks compare Monte Carlo estimates against a band.
struct Assertion {
  Assertion() = default;
  explicit Assertion(std::string name_, std::string kind_ = "exact", double value_ = 0.0, double tolerance_ = 0.0,
                     bool pass_ = false)
      : name(std::move(name_)), kind(std::move(kind_)), value(value_), tolerance(tolerance_), pass(pass_) {}

  std::string name;
  std::string kind = "exact";
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"name", name}, {"kind", kind}, {"value", value}, {"tolerance", tolerance},
            {"pass", pass}, {"detail", detail}, {"seconds", seconds}};
  }
};

struct RunReport {
  ExperimentConfig config;
  std::string build = HEXLOOP_BUILD_ID;
  double wall_seconds = 0.0;
  std::vector<StatRow> rows;
  std::vector<Assertion> assertions;

  [[nodiscard]] bool pass() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json rs = nlohmann::json::array(), as = nlohmann::json::array();
    for (const auto& r : rows) rs.push_back(r.to_json());
    for (const auto& a : assertions) as.push_back(a.to_json());
    return {{"config", config.to_json()}, {"build", build}, {"wall_seconds", wall_seconds},
            {"rows", rs}, {"assertions", as}, {"pass", pass()}};
  }
};

class Stopwatch {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// Domains

namespace detail {

inline int ball_radius_of(const std::vector<FaceCoord>& faces) {
  int r = 0;
  for (const auto& f : faces) r = std::max({r, std::abs(f.k + f.l), std::abs(f.k - f.l)});
  return r;
}

inline std::vector<FaceCoord> normalise(std::vector<FaceCoord> cells) {
  std::sort(cells.begin(), cells.end());
  const FaceCoord o = cells.front();
  for (auto& c : cells) c = {c.k - o.k, c.l - o.l};
  return cells;
}

}  // namespace detail

/// Every polyhex with `size` cells up to translation, smallest cell at (0,0).
inline std::vector<std::vector<FaceCoord>> fixed_polyhexes(int size) {
  if (size < 1) return {};
  std::set<std::vector<FaceCoord>> level{{{0, 0}}};
  for (int s = 1; s < size; ++s) {
    std::set<std::vector<FaceCoord>> next;
    for (const auto& cells : level)
      for (const auto& c : cells)
        for (const auto& d : kFaceDirections) {
          const FaceCoord n = c + d;
          if (std::find(cells.begin(), cells.end(), n) != cells.end()) continue;
          auto grown = cells;
          grown.push_back(n);
          next.insert(detail::normalise(std::move(grown)));
        }
    level = std::move(next);
  }
  return {level.begin(), level.end()};
}

/// Connected face set grown from (0,0) by adding uniform boundary cells.
inline std::vector<FaceCoord> random_polyhex(int size, CounterRng& rng) {
  std::vector<FaceCoord> cells{{0, 0}};
  while (static_cast<int>(cells.size()) < size) {
    std::vector<FaceCoord> frontier;
    for (const auto& c : cells)
      for (const auto& d : kFaceDirections) {
        const FaceCoord n = c + d;
        if (std::find(cells.begin(), cells.end(), n) == cells.end() &&
            std::find(frontier.begin(), frontier.end(), n) == frontier.end())
          frontier.push_back(n);
      }
    std::sort(frontier.begin(), frontier.end());
    cells.push_back(frontier[rng.below(frontier.size())]);
  }
  return cells;
}

/// Gibbs spec on a face set inside a ball with a two-face margin; nullopt if
/// the set is not simply connected.
inline std::optional<GibbsSpec> spec_on(const std::vector<FaceCoord>& faces, double n, double x) {
  auto host = std::make_shared<const HexPatch>(HexPatch::ball(detail::ball_radius_of(faces) + 2));
  try {
    Domain d(host, faces);
    return GibbsSpec(std::move(d), n, x, LoopConfig(host));
  } catch (const StructuralError&) {
    return std::nullopt;
  }
}

/// Domains for the detailed-balance sweep: every polyhex with at most
/// `exhaustive` cells, then `per_size` random ones of each larger size up to
/// `max_faces`.
inline std::vector<std::vector<FaceCoord>> detailed_balance_domains(int exhaustive, int max_faces, int per_size,
                                                                    std::uint64_t seed) {
  std::vector<std::vector<FaceCoord>> out;
  for (int s = 1; s <= exhaustive; ++s)
    for (auto& cells : fixed_polyhexes(s))
      if (spec_on(cells, 1.0, 1.0)) out.push_back(std::move(cells));
  CounterRng rng(seed);
  for (int s = exhaustive + 1; s <= max_faces; ++s) {
    int made = 0;
    while (made < per_size) {
      auto cells = random_polyhex(s, rng);
      if (!spec_on(cells, 1.0, 1.0)) continue;
      out.push_back(std::move(cells));
      ++made;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Invariant suite

/// Maximum relative gap |π_i a_if − π_j a_jf| / max over all states i and
/// domain faces f, with π from enumeration under `wt` and acceptances from
/// the chain's local update.
template <class Weight = StandardWeight>
double detailed_balance_error(const GibbsSpec& spec, Weight wt = {}) {
  const auto mu = enumerate_gibbs(spec, wt);
  const auto index = mu.index();
  LoopChain chain(spec, spec.boundary, 0);
  double worst = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (int f : spec.domain.faces()) {
      const LoopConfig w2 = face_flip(mu.config(i), spec.domain, f);
      const std::size_t j = index.at(w2);
      const double a = mu.prob(i) * chain.acceptance(mu.config(i), f);
      const double b = mu.prob(j) * chain.acceptance(w2, f);
      const double top = std::max(a, b);
      if (top > 0.0) worst = std::max(worst, std::abs(a - b) / top);
    }
  return worst;
}

struct SuiteOptions {
  std::uint64_t seed = 1;
  double scale = 1.0;  // multiplies every sample count
  int threads = 1;
  std::map<std::string, double> tolerances;

  [[nodiscard]] long count(double full) const { return std::max(1L, std::lround(full * scale)); }
  [[nodiscard]] double tol(const std::string& name, double fallback) const {
    const auto it = tolerances.find(name);
    return it == tolerances.end() ? fallback : it->second;
  }
  /// Band for a Monte Carlo check calibrated at full size; widens as 1/√scale.
  [[nodiscard]] double stat_tol(const std::string& name, double full) const {
    return tol(name, full / std::sqrt(std::min(scale, 1.0)));
  }
};

/// Parameter grid [1,2] × [1/√2, 1], three points each.
inline std::vector<std::pair<double, double>> coupling_grid() {
  std::vector<std::pair<double, double>> g;
  const double lo = 1.0 / std::sqrt(2.0);
  for (double n : {1.0, 1.5, 2.0})
    for (double x : {lo, (lo + 1.0) / 2.0, 1.0}) g.emplace_back(n, x);
  return g;
}

inline Assertion check_sampler_agreement(const SuiteOptions& o) {
  Stopwatch sw;
  const std::vector<std::pair<double, double>> params{
      {1.0, 1.0}, {2.0, 1.0 / std::sqrt(2.0)}, {1.5, 0.8}, {1.0, 1.0 / std::sqrt(3.0)}};
  const long samples = o.count(1e5);
  const auto tvs = parallel_map<double>(static_cast<int>(params.size()), o.threads, [&](int i) {
    const auto spec = GibbsSpec::ball(1, params[i].first, params[i].second);
    const auto mu = enumerate_gibbs(spec);
    LoopChain chain(spec, spec.boundary, derive_seed(o.seed, i));
    chain.sweep(1000);
    std::map<LoopConfig, long> counts;
    for (long s = 0; s < samples; ++s) {
      chain.decorrelate(10);
      ++counts[chain.state()];
    }
    return total_variation(mu, counts);
  });
  Assertion a{"sampler_agreement", "statistical"};
  a.value = *std::max_element(tvs.begin(), tvs.end());
  a.tolerance = o.stat_tol("sampler_agreement", 0.02);
  a.pass = a.value <= a.tolerance;
  std::ostringstream d;
  d << "B_1, " << samples << " samples per point, TV";
  for (std::size_t i = 0; i < params.size(); ++i)
    d << " (" << params[i].first << "," << params[i].second << ")=" << format_double(tvs[i]);
  a.detail = d.str();
  a.seconds = sw.seconds();
  return a;
}

template <class Weight = StandardWeight>
Assertion check_law_preservation(const SuiteOptions& o, Weight wt = {}) {
  Stopwatch sw;
  const auto grid = coupling_grid();
  const auto tvs = parallel_map<double>(static_cast<int>(grid.size()), o.threads, [&](int i) {
    const auto spec = GibbsSpec::ball(1, grid[i].first, grid[i].second);
    return law_preservation(spec, window_faces(spec, {{0, 0}}), 0.0, wt).tv_exact;
  });
  Assertion a{"law_preservation", "exact"};
  a.value = *std::max_element(tvs.begin(), tvs.end());
  a.tolerance = o.tol("law_preservation", 1e-9);
  a.pass = a.value <= a.tolerance;
  a.detail = "B_1 with window B_0 over a 3x3 (n,x) grid; max exact TV";
  a.seconds = sw.seconds();
  return a;
}

struct CatalanHost {
  HexPatch patch;
  PlanarGraph planar;
  FaceTrace faces;
  Graph graph;
  CutSet cut;
  std::vector<int> outer;

  CatalanHost(int m, int n) : patch(HexPatch::ball(m)), planar(patch.triangular_planar()), faces(trace_faces(planar)) {
    graph = planar.adjacency();
    cut = cut_set(planar, faces, patch.face_id({0, 0}), n);
    outer = outer_boundary(planar, faces);
  }
};

struct CatalanTally {
  long tries = 0;
  long accepted = 0;
  long violations = 0;
};

/// Rejection-samples monotone pairs (p uniform on [0.3, 0.5]) on the
/// triangular graph of B_m with cut radius n until `target[k-1]` pairs in
/// the 2k-arm event are collected for each k.
inline std::vector<CatalanTally> catalan_run(int m, int n, const std::vector<long>& target, std::uint64_t seed,
                                             long max_tries) {
  const CatalanHost h(m, n);
  CounterRng rng(seed);
  std::vector<CatalanTally> t(target.size());
  auto done = [&] {
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i].accepted < target[i]) return false;
    return true;
  };
  long trial = 0;
  for (; trial < max_tries && !done(); ++trial) {
    const double p = 0.3 + 0.2 * rng.uniform01();
    auto [s, tau] = monotone_coupling(h.graph.size(), p, rng);
    for (std::size_t i = 0; i < t.size(); ++i) {
      // No 2k arcs means no 2(k+1) arcs either.
      const auto arcs = find_arm_arcs(h.graph, s, tau, h.cut, h.outer, static_cast<int>(i) + 1);
      if (!arcs) break;
      if (t[i].accepted >= target[i]) continue;
      ++t[i].accepted;
      t[i].violations += !catalan_check(h.graph, s, tau, h.cut, *arcs, h.outer).ok();
    }
  }
  for (auto& x : t) x.tries = trial;
  return t;
}

inline Assertion check_catalan(const SuiteOptions& o) {
  Stopwatch sw;
  struct Unit {
    int m, n;
    std::vector<long> target;
  };
  const std::vector<Unit> units{{4, 1, {o.count(2000)}},
                                {6, 2, {o.count(1500), o.count(1500)}},
                                {8, 3, {o.count(1500), o.count(1500), o.count(2000)}}};
  const auto res = parallel_map<std::vector<CatalanTally>>(static_cast<int>(units.size()), o.threads, [&](int i) {
    return catalan_run(units[i].m, units[i].n, units[i].target, derive_seed(o.seed, 100 + i), 5'000'000);
  });
  long accepted = 0, violations = 0, wanted = 0;
  std::ostringstream d;
  for (std::size_t u = 0; u < units.size(); ++u)
    for (std::size_t k = 0; k < res[u].size(); ++k) {
      accepted += res[u][k].accepted;
      violations += res[u][k].violations;
      wanted += units[u].target[k];
      d << "B_" << units[u].m << " n=" << units[u].n << " k=" << k + 1 << ": " << res[u][k].accepted << "/"
        << res[u][k].tries << "; ";
    }
  Assertion a{"catalan", "exact"};
  a.value = static_cast<double>(violations);
  a.tolerance = o.tol("catalan", 0.0);
  a.pass = violations <= a.tolerance && accepted == wanted;
  d << accepted << " accepted pairs, " << violations << " violations";
  a.detail = d.str();
  a.seconds = sw.seconds();
  return a;
}

/// One random (forest, cluster) instance: triangular graph of a random
/// polyhex, Bernoulli open cluster K of a random open vertex, Wilson tree on
/// K with some edges removed.
struct TrifurcationInstance {
  Graph ambient;
  SpanningForest forest;
  std::vector<int> cluster;
};

inline TrifurcationInstance random_trifurcation_instance(CounterRng& rng, int max_vertices = 50) {
  for (;;) {
    const int size = 10 + static_cast<int>(rng.below(max_vertices - 9));
    const HexPatch patch = HexPatch::from_faces(random_polyhex(size, rng));
    TrifurcationInstance inst;
    inst.ambient = patch.triangular_graph();
    const double p = 0.5 + 0.4 * rng.uniform01();
    const auto cfg = bernoulli_sites(inst.ambient.size(), p, rng);
    const auto cl = clusters(inst.ambient, cfg, 1);
    if (cl.count() == 0) continue;
    std::vector<int> open;
    for (int v = 0; v < inst.ambient.size(); ++v)
      if (cfg[v]) open.push_back(v);
    const int root_label = cl.label[open[rng.below(open.size())]];
    std::vector<int> local(inst.ambient.size(), -1);
    for (int v = 0; v < inst.ambient.size(); ++v)
      if (cl.label[v] == root_label) {
        local[v] = static_cast<int>(inst.cluster.size());
        inst.cluster.push_back(v);
      }
    Graph sub(static_cast<int>(inst.cluster.size()));
    for (const auto& [u, v] : inst.ambient.edge_list())
      if (local[u] >= 0 && local[v] >= 0) sub.add_edge(local[u], local[v]);
    const auto tree = wilson_ust(sub, rng);
    const double drop = rng.bernoulli(0.5) ? 0.0 : 0.2 * rng.uniform01();
    inst.forest.vertex_count = inst.ambient.size();
    for (const auto& [u, v] : tree.edges)
      if (!rng.bernoulli(drop)) inst.forest.edges.emplace_back(inst.cluster[u], inst.cluster[v]);
    return inst;
  }
}

inline Assertion check_trifurcation(const SuiteOptions& o) {
  Stopwatch sw;
  const long total = o.count(1e4);
  const int chunks = 8;
  struct Part {
    long violations = 0;
    long with_trifurcation = 0;
    int max_vertices = 0;
  };
  const auto parts = parallel_map<Part>(chunks, o.threads, [&](int c) {
    CounterRng rng(derive_seed(o.seed, 200 + c));
    Part p;
    for (long i = c; i < total; i += chunks) {
      const auto inst = random_trifurcation_instance(rng);
      const auto r = trifurcation_bound_check(inst.forest, inst.cluster, inst.ambient);
      p.violations += !r.ok();
      p.with_trifurcation += r.trifurcations > 0;
      p.max_vertices = std::max(p.max_vertices, inst.ambient.size());
    }
    return p;
  });
  Part sum;
  for (const auto& p : parts) {
    sum.violations += p.violations;
    sum.with_trifurcation += p.with_trifurcation;
    sum.max_vertices = std::max(sum.max_vertices, p.max_vertices);
  }
  Assertion a{"trifurcation_bound", "exact"};
  a.value = static_cast<double>(sum.violations);
  a.tolerance = o.tol("trifurcation_bound", 0.0);
  a.pass = a.value <= a.tolerance;
  a.detail = std::to_string(total) + " instances on at most " + std::to_string(sum.max_vertices) + " vertices, " +
             std::to_string(sum.with_trifurcation) + " with a trifurcation";
  a.seconds = sw.seconds();
  return a;
}

/// Number of ξ on which T↑-connectivity and Δ(ξ)-connectivity disagree.
inline long delta_equivalence_violations(const std::shared_ptr<const HexPatch>& h, long count, CounterRng& rng) {
  const auto ug = h->up_graph();
  const auto& ups = h->up_vertices();
  long bad = 0;
  for (long t = 0; t < count; ++t) {
    Blocking xi(h);
    const double p = rng.uniform01();
    for (auto& o : xi.open) o = rng.bernoulli(p);
    const auto cl = clusters(ug, xi.open, 1);
    auto uf = delta_clusters(xi);
    // Same partition iff the face-root of each ξ-cluster is a bijection.
    std::map<int, int> label_to_root, root_to_label;
    bool ok = true;
    for (std::size_t i = 0; i < ups.size() && ok; ++i) {
      if (!xi.open[i]) continue;
      const int root = uf.find(h->vertex_faces(ups[i])[0]);
      const int label = cl.label[i];
      const auto a = label_to_root.emplace(label, root).first;
      const auto b = root_to_label.emplace(root, label).first;
      ok = a->second == root && b->second == label;
    }
    bad += !ok;
  }
  return bad;
}

inline Assertion check_delta_equivalence(const SuiteOptions& o) {
  Stopwatch sw;
  const auto h = std::make_shared<const HexPatch>(HexPatch::ball(5));
  CounterRng rng(derive_seed(o.seed, 300));
  const long count = o.count(1e4);
  Assertion a{"delta_equivalence", "exact"};
  a.value = static_cast<double>(delta_equivalence_violations(h, count, rng));
  a.tolerance = o.tol("delta_equivalence", 0.0);
  a.pass = a.value <= a.tolerance;
  a.detail = std::to_string(count) + " random xi on B_5";
  a.seconds = sw.seconds();
  return a;
}

inline Assertion check_self_duality(const SuiteOptions& o) {
  Stopwatch sw;
  const int side = 32;
  const Graph g = triangular_rhombus(side);
  const long total = o.count(1e5);
  const int chunks = 8;
  const auto hits = parallel_map<long>(chunks, o.threads, [&](int c) {
    CounterRng rng(derive_seed(o.seed, 400 + c));
    long h = 0;
    for (long i = c; i < total; i += chunks) h += rhombus_crossing(g, side, bernoulli_sites(g.size(), 0.5, rng));
    return h;
  });
  long sum = 0;
  for (long h : hits) sum += h;
  const double est = static_cast<double>(sum) / static_cast<double>(total);
  Assertion a{"self_duality", "statistical"};
  a.value = std::abs(est - 0.5);
  a.tolerance = o.stat_tol("self_duality", 0.005);
  a.pass = a.value <= a.tolerance;
  a.detail = "side 32 rhombus, " + std::to_string(total) + " samples, estimate " + format_double(est);
  a.seconds = sw.seconds();
  return a;
}

inline Assertion check_rsw(const SuiteOptions& o) {
  Stopwatch sw;
  const std::vector<int> ks{2, 3, 4};
  const auto res = parallel_map<RswResult>(static_cast<int>(ks.size()), o.threads, [&](int i) {
    RswOptions opt;
    opt.samples = o.count(4000);
    return rsw_estimate(rsw_spec(ks[i], 1.0, 1.0), ks[i], derive_seed(o.seed, 500 + i), opt);
  });
  const double lo = o.tol("rsw_lo", 0.02), hi = 1.0 - o.tol("rsw_lo", 0.02);
  Assertion a{"rsw_band", "statistical"};
  a.pass = true;
  std::ostringstream d;
  d << "n=x=1:";
  double margin = 1.0;
  for (const auto& r : res) {
    a.pass = a.pass && r.probability.lo > lo && r.probability.hi < hi;
    margin = std::min({margin, r.probability.lo - lo, hi - r.probability.hi});
    d << " k=" << r.k << " " << format_double(r.probability.estimate) << " [" << format_double(r.probability.lo)
      << ", " << format_double(r.probability.hi) << "]";
  }
  a.value = margin;
  a.tolerance = lo;
  a.detail = d.str();
  a.seconds = sw.seconds();
  return a;
}

inline Assertion check_fkg(const SuiteOptions& o) {
  Stopwatch sw;
  double worst_product = 0.0;
  CounterRng rng(derive_seed(o.seed, 600));
  for (int m = 1; m <= 4; ++m)
    for (int t = 0; t < 50; ++t) {
      std::vector<double> ps(m);
      for (auto& p : ps) p = t == 0 ? 0.5 : rng.uniform01();
      worst_product = std::min(worst_product, check_positive_association(product_law(ps), m).gap);
    }
  const double tol = o.tol("fkg", 1e-12);
  bool domination_ok = true;
  for (int i = 0; i <= 100; ++i) {
    const double p = i / 100.0;
    for (int m = 1; m <= 3; ++m) {
      const bool dominated = check_dominated_by_complement(bernoulli_law(m, p), m).gap >= -tol;
      domination_ok = domination_ok && dominated == (p <= 0.5);
    }
  }
  const ExactMeasure<SiteMask> anti({0u, 1u, 2u, 3u}, {0.1, 0.4, 0.4, 0.1});
  const double anti_gap = check_positive_association(anti, 2).gap;
  Assertion a{"fkg_certificates", "exact"};
  a.value = worst_product;
  a.tolerance = tol;
  a.pass = worst_product >= -tol && domination_ok && std::abs(anti_gap + 0.15) <= std::max(tol, 1e-12);
  a.detail = "product gap " + format_double(worst_product) + ", domination iff p<=1/2: " +
             (domination_ok ? "yes" : "no") + ", anticorrelated gap " + format_double(anti_gap);
  a.seconds = sw.seconds();
  return a;
}

template <class Weight = StandardWeight>
Assertion check_detailed_balance(const SuiteOptions& o, Weight wt = {}) {
  Stopwatch sw;
  const auto domains = detailed_balance_domains(6, 12, std::max(1, static_cast<int>(o.count(20))), derive_seed(o.seed, 700));
  const auto grid = coupling_grid();
  const auto errs = parallel_map<double>(static_cast<int>(domains.size()), o.threads, [&](int i) {
    double worst = 0.0;
    for (const auto& [n, x] : grid) worst = std::max(worst, detailed_balance_error(*spec_on(domains[i], n, x), wt));
    return worst;
  });
  Assertion a{"detailed_balance", "exact"};
  a.value = *std::max_element(errs.begin(), errs.end());
  a.tolerance = o.tol("detailed_balance", 1e-12);
  a.pass = a.value <= a.tolerance;
  a.detail = std::to_string(domains.size()) + " domains of 1..12 faces over the 3x3 grid";
  a.seconds = sw.seconds();
  return a;
}

inline Graph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  Graph g(n);
  for (const auto& [u, v] : edges) g.add_edge(u, v);
  return g;
}

/// Spanning trees of a small graph by brute force over edge subsets.
inline std::vector<std::vector<std::pair<int, int>>> all_spanning_trees(const Graph& g) {
  const auto edges = g.edge_list();
  std::vector<std::vector<std::pair<int, int>>> out;
  const int m = static_cast<int>(edges.size());
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    if (std::popcount(mask) != g.size() - 1) continue;
    SpanningForest f{g.size(), {}};
    for (int i = 0; i < m; ++i)
      if (mask >> i & 1) f.edges.push_back(edges[i]);
    if (f.acyclic()) out.push_back(f.canonical());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline Assertion check_wilson(const SuiteOptions& o) {
  Stopwatch sw;
  const std::vector<Graph> graphs{graph_from_edges(3, {{0, 1}, {1, 2}, {2, 0}}),
                                  graph_from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}})};
  const long samples = o.count(1e5);
  const auto tvs = parallel_map<double>(static_cast<int>(graphs.size()), o.threads, [&](int i) {
    const auto trees = all_spanning_trees(graphs[i]);
    std::map<std::vector<std::pair<int, int>>, double> uniform;
    for (const auto& t : trees) uniform[t] = 1.0 / static_cast<double>(trees.size());
    std::map<std::vector<std::pair<int, int>>, double> emp;
    CounterRng rng(derive_seed(o.seed, 800 + i));
    for (long s = 0; s < samples; ++s) emp[wilson_ust(graphs[i], rng).canonical()] += 1.0 / static_cast<double>(samples);
    return total_variation(uniform, emp);
  });
  Assertion a{"wilson_uniform", "statistical"};
  a.value = std::max(tvs[0], tvs[1]);
  a.tolerance = o.stat_tol("wilson_uniform", 0.02);
  a.pass = a.value <= a.tolerance;
  a.detail = "triangle TV " + format_double(tvs[0]) + ", 4-cycle TV " + format_double(tvs[1]) + " at " +
             std::to_string(samples) + " samples";
  a.seconds = sw.seconds();
  return a;
}

/// The ten acceptance checks in order.
template <class Weight = StandardWeight>
std::vector<Assertion> run_suite(const SuiteOptions& o, Weight wt = {}) {
  return {check_sampler_agreement(o), check_law_preservation(o, wt), check_catalan(o),
          check_trifurcation(o),      check_delta_equivalence(o),    check_self_duality(o),
          check_rsw(o),               check_fkg(o),                  check_detailed_balance(o, wt),
          check_wilson(o)};
}

// ---------------------------------------------------------------------------
// Commands

struct CommandResult {
  RunReport report;
  std::string payload;  // CSV or JSON written to --out
};

/// Spec for Ω = B_r with the configured boundary.
inline GibbsSpec config_spec(const ExperimentConfig& c, int r, double n, double x) {
  auto spec = GibbsSpec::ball(r, n, x);
  if (!c.boundary) return spec;
  auto w = LoopConfig::validate(spec.host_ptr(), *c.boundary);
  return {spec.domain, n, x, std::move(w)};
}

inline bool origin_hexagon(const LoopConfig& w) {
  const int f = w.patch().face_id({0, 0});
  if (f < 0) return false;
  for (int e : w.patch().face_edges(f))
    if (!w.has(e)) return false;
  return true;
}

inline CommandResult cmd_enumerate(const ExperimentConfig& c) {
  Stopwatch sw;
  CommandResult out;
  out.report.config = c;
  const auto spec = config_spec(c, c.r, c.n, c.x);
  const auto mu = enumerate_gibbs(spec);
  const double p_loop = mu.probability(origin_hexagon);
  std::vector<double> edge_marginal;
  for (int e : spec.domain.edges()) edge_marginal.push_back(mu.probability([e](const LoopConfig& w) { return w.has(e); }));
  nlohmann::json j{{"n", c.n},
                   {"x", c.x},
                   {"r", c.r},
                   {"states", mu.size()},
                   {"log_z", mu.log_z()},
                   {"z", std::exp(mu.log_z())},
                   {"p_loop_origin", p_loop},
                   {"domain_edges", spec.domain.edges()},
                   {"edge_marginals", edge_marginal},
                   {"table", mu.to_json([](const LoopConfig& w) { return w.edge_ids(); })}};
  out.payload = j.dump(2) + "\n";
  out.report.rows.push_back({"Z", "exact enumeration", std::exp(mu.log_z()), std::exp(mu.log_z()),
                             std::exp(mu.log_z()), static_cast<long>(mu.size()), 0});
  out.report.rows.push_back({"p_loop_origin", "exact enumeration", p_loop, p_loop, p_loop,
                             static_cast<long>(mu.size()), 0});
  out.report.wall_seconds = sw.seconds();
  return out;
}

inline CommandResult cmd_sample(const ExperimentConfig& c) {
  Stopwatch sw;
  const std::uint64_t seed = c.require_seed();
  const auto spec = config_spec(c, c.r, c.n, c.x);
  struct Trace {
    std::vector<std::array<long, 3>> rows;  // edges, loops, origin hexagon
    ChainDiagnostics diag;
  };
  const auto traces = parallel_map<Trace>(c.chains, c.threads, [&](int i) {
    LoopChain chain(spec, spec.boundary, derive_seed(seed, i));
    chain.sweep(c.burnin);
    Trace t;
    for (long s = 0; s < c.samples; ++s) {
      chain.decorrelate(c.sweeps);
      const auto& w = chain.state();
      t.rows.push_back({spec.inner_edges(w), decompose(w, &spec.domain).ell, origin_hexagon(w)});
    }
    t.diag = chain.diagnostics();
    return t;
  });
  Csv csv({"chain", "sample", "edges", "loops", "origin_loop"});
  long hits = 0, total = 0;
  double loops = 0;
  ChainDiagnostics diag;
  for (int i = 0; i < c.chains; ++i) {
    for (std::size_t s = 0; s < traces[i].rows.size(); ++s) {
      const auto& r = traces[i].rows[s];
      csv.row({Csv::num(i), Csv::num(static_cast<long>(s)), Csv::num(r[0]), Csv::num(r[1]), Csv::num(r[2])});
      hits += r[2];
      loops += static_cast<double>(r[1]);
      ++total;
    }
    diag.proposals += traces[i].diag.proposals;
    diag.accepted += traces[i].diag.accepted;
  }
  CommandResult out;
  out.report.config = c;
  out.payload = csv.str();
  const auto pr = wilson_interval(hits, total);
  out.report.rows.push_back({"p_loop_origin", "Metropolis frequency, Wilson 95% interval", pr.estimate, pr.lo, pr.hi,
                             total, seed});
  out.report.rows.push_back({"mean_loops", "Metropolis sample mean", loops / static_cast<double>(total),
                             loops / static_cast<double>(total), loops / static_cast<double>(total), total, seed});
  out.report.rows.push_back({"acceptance_rate", "accepted / proposed", diag.acceptance_rate(), diag.acceptance_rate(),
                             diag.acceptance_rate(), static_cast<long>(diag.proposals), seed});
  out.report.wall_seconds = sw.seconds();
  return out;
}

inline CommandResult cmd_rsw(const ExperimentConfig& c) {
  Stopwatch sw;
  const std::uint64_t seed = c.require_seed();
  struct Point {
    double n, x;
    int k;
  };
  std::vector<Point> grid;
  for (double n : c.grid_n)
    for (double x : c.grid_x)
      for (int k : c.grid_k) grid.push_back({n, x, k});
  for (const auto& g : grid)
    if (g.k < 1) throw RangeError("annulus index k must be positive");
  const int tasks = static_cast<int>(grid.size()) * c.chains;
  const auto parts = parallel_map<RswResult>(tasks, c.threads, [&](int t) {
    const auto& g = grid[t / c.chains];
    RswOptions opt;
    opt.samples = c.samples;
    opt.burnin = c.burnin;
    opt.gap = c.sweeps;
    return rsw_estimate(rsw_spec(g.k, g.n, g.x), g.k, derive_seed(derive_seed(seed, t / c.chains), t % c.chains), opt);
  });
  Csv csv({"n", "x", "k", "estimate", "ci_lo", "ci_hi", "samples", "supported"});
  CommandResult out;
  out.report.config = c;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    long hits = 0, trials = 0;
    for (int ch = 0; ch < c.chains; ++ch) {
      hits += parts[i * c.chains + ch].probability.successes;
      trials += parts[i * c.chains + ch].probability.trials;
    }
    const auto pr = wilson_interval(hits, trials);
    const bool supported = grid[i].n * grid[i].x * grid[i].x <= 1.0;
    csv.row({Csv::num(grid[i].n), Csv::num(grid[i].x), Csv::num(grid[i].k), Csv::num(pr.estimate), Csv::num(pr.lo),
             Csv::num(pr.hi), Csv::num(trials), supported ? "1" : "0"});
    out.report.rows.push_back({"annulus_loop n=" + format_double(grid[i].n) + " x=" + format_double(grid[i].x) +
                                   " k=" + std::to_string(grid[i].k),
                               "Metropolis frequency, Wilson 95% interval", pr.estimate, pr.lo, pr.hi, trials,
                               derive_seed(seed, i)});
  }
  out.payload = csv.str();
  out.report.wall_seconds = sw.seconds();
  return out;
}

inline CommandResult cmd_blocking(const ExperimentConfig& c) {
  Stopwatch sw;
  const std::uint64_t seed = c.require_seed();
  struct Point {
    double n, x;
    int r;
  };
  std::vector<Point> grid;
  for (double n : c.ns())
    for (double x : c.xs())
      for (int r : c.grid_k.empty() ? std::vector<int>{c.r} : c.grid_k) grid.push_back({n, x, r});
  for (const auto& g : grid) {
    check_blocking_parameters(g.n, g.x);
    if (g.r < 1) throw RangeError("blocking radius must be positive");
  }
  struct Tally {
    long crossings = 0;
    long blocked_loops = 0;
    long open_sites = 0;
    double largest = 0.0;
  };
  const auto tallies = parallel_map<Tally>(static_cast<int>(grid.size()), c.threads, [&](int i) {
    const auto& g = grid[i];
    const auto spec = GibbsSpec::ball(2 * g.r + 1, g.n, g.x);
    LoopChain chain(spec, spec.boundary, derive_seed(seed, i));
    CounterRng xi_rng = CounterRng(seed).fork(1000 + i);
    chain.sweep(c.burnin);
    Tally t;
    for (long s = 0; s < c.samples; ++s) {
      chain.decorrelate(c.sweeps);
      const auto xi = sample_xi(chain.state(), g.n, g.x, xi_rng, &spec.domain);
      const auto st = blocking_stats(xi, g.r);
      t.crossings += st.crossing;
      t.open_sites += st.open;
      t.largest += st.largest_fraction;
      t.blocked_loops += static_cast<long>(decompose(split_omega(chain.state(), xi).block).loops.size());
    }
    return t;
  });
  Csv csv({"n", "x", "r", "crossing", "ci_lo", "ci_hi", "largest_fraction", "blocked_loops", "samples"});
  CommandResult out;
  out.report.config = c;
  std::vector<Proportion> props;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto pr = wilson_interval(tallies[i].crossings, c.samples);
    props.push_back(pr);
    const double largest = tallies[i].largest / static_cast<double>(c.samples);
    csv.row({Csv::num(grid[i].n), Csv::num(grid[i].x), Csv::num(grid[i].r), Csv::num(pr.estimate), Csv::num(pr.lo),
             Csv::num(pr.hi), Csv::num(largest), Csv::num(tallies[i].blocked_loops), Csv::num(c.samples)});
    out.report.rows.push_back({"crossing n=" + format_double(grid[i].n) + " x=" + format_double(grid[i].x) +
                                   " r=" + std::to_string(grid[i].r),
                               "sampled xi on Metropolis states, Wilson 95% interval", pr.estimate, pr.lo, pr.hi,
                               c.samples, derive_seed(seed, i)});
    if (grid[i].n == 1.0) {
      Assertion a{"no_loop_blocking n=1 r=" + std::to_string(grid[i].r), "exact"};
      a.value = static_cast<double>(tallies[i].blocked_loops);
      a.pass = tallies[i].blocked_loops == 0;
      out.report.assertions.push_back(a);
    }
    if (grid[i].n == 1.0 && grid[i].x == 1.0) {
      Assertion a{"xi_empty n=x=1 r=" + std::to_string(grid[i].r), "exact"};
      a.value = static_cast<double>(tallies[i].open_sites);
      a.pass = tallies[i].open_sites == 0;
      out.report.assertions.push_back(a);
    }
  }
  // Crossing frequency is non-increasing in r ≥ 2 within 2 standard errors.
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const auto& a = grid[i];
    const auto& b = grid[i + 1];
    if (a.n != b.n || a.x != b.x || b.r <= a.r || a.r < 2) continue;
    auto se = [&](const Proportion& p) { return std::sqrt(p.estimate * (1 - p.estimate) / c.samples); };
    const double slack = 2 * std::hypot(se(props[i]), se(props[i + 1]));
    Assertion m{"crossing_monotone n=" + format_double(a.n) + " x=" + format_double(a.x) + " r=" +
                    std::to_string(a.r) + "->" + std::to_string(b.r),
                "statistical"};
    m.value = props[i + 1].estimate - props[i].estimate;
    m.tolerance = slack;
    m.pass = m.value <= slack;
    out.report.assertions.push_back(m);
  }
  out.payload = csv.str();
  out.report.wall_seconds = sw.seconds();
  return out;
}

inline CommandResult cmd_arms(const ExperimentConfig& c) {
  Stopwatch sw;
  const std::uint64_t seed = c.require_seed();
  if (c.k < 1) throw RangeError("k must be positive");
  const CatalanHost h(c.r, c.cut);
  CommandResult out;
  out.report.config = c;
  const double p = c.p;
  const auto table = estimate_pij(
      h.graph, h.cut, h.outer, [&](CounterRng& rng) { return bernoulli_sites(h.graph.size(), p, rng); },
      static_cast<int>(c.samples), seed);
  nlohmann::json j{{"host_radius", c.r}, {"cut_radius", c.cut}, {"cut", h.cut.cut}, {"p", p}, {"pij", table.to_json()}};
  try {
    j["split"] = iterated_split(table, h.cut.cut, c.eps, c.k).to_json();
  } catch (const PreconditionError& e) {
    j["split"] = {{"error", e.what()}};
  }
  std::vector<long> target(c.k, 0);
  target.back() = c.samples;
  const auto tally = catalan_run(c.r, c.cut, target, derive_seed(seed, 1), c.samples);
  const auto& t = tally.back();
  j["catalan"] = {{"k", c.k}, {"tries", t.tries}, {"accepted", t.accepted}, {"violations", t.violations}};
  Assertion a{"catalan k=" + std::to_string(c.k), "exact"};
  a.value = static_cast<double>(t.violations);
  a.pass = t.violations == 0;
  a.detail = std::to_string(t.accepted) + " of " + std::to_string(t.tries) + " pairs in the arm event";
  out.report.assertions.push_back(a);
  out.report.rows.push_back({"p_1L", "Monte Carlo arm frequency", table.p(1, table.length()),
                             table.p(1, table.length()) - 2 * table.standard_error(1, table.length()),
                             table.p(1, table.length()) + 2 * table.standard_error(1, table.length()),
                             table.sample_count(), seed});
  out.payload = j.dump(2) + "\n";
  out.report.wall_seconds = sw.seconds();
  return out;
}

inline CommandResult cmd_trifurcation(const ExperimentConfig& c) {
  Stopwatch sw;
  const std::uint64_t seed = c.require_seed();
  struct Row {
    int vertices = 0, cluster = 0, boundary = 0, trifurcations = 0;
  };
  const auto rows = parallel_map<Row>(static_cast<int>(c.samples), c.threads, [&](int i) {
    CounterRng rng(derive_seed(seed, i));
    const auto inst = random_trifurcation_instance(rng);
    const auto r = trifurcation_bound_check(inst.forest, inst.cluster, inst.ambient);
    return Row{inst.ambient.size(), static_cast<int>(inst.cluster.size()), r.boundary, r.trifurcations};
  });
  Csv csv({"instance", "vertices", "cluster", "boundary", "trifurcations"});
  long violations = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    csv.row({Csv::num(static_cast<long>(i)), Csv::num(r.vertices), Csv::num(r.cluster), Csv::num(r.boundary),
             Csv::num(r.trifurcations)});
    violations += r.trifurcations > r.boundary;
  }
  CommandResult out;
  out.report.config = c;
  Assertion a{"trifurcation_bound", "exact"};
  a.value = static_cast<double>(violations);
  a.pass = violations == 0;
  out.report.assertions.push_back(a);
  out.payload = csv.str();
  out.report.wall_seconds = sw.seconds();
  return out;
}

inline CommandResult cmd_couple(const ExperimentConfig& c) {
  Stopwatch sw;
  const std::uint64_t seed = c.require_seed();
  if (c.window > c.r) throw RangeError("window radius must not exceed r");
  const auto spec = config_spec(c, c.r, c.n, c.x);
  check_blocking_parameters(c.n, c.x);
  const auto window = window_faces(spec, HexPatch::ball(c.window).faces());
  CommandResult out;
  out.report.config = c;
  nlohmann::json j{{"n", c.n}, {"x", c.x}, {"r", c.r}, {"window", c.window}};
  if (spec.domain.face_count() <= kEnumerationFaceLimit) {
    const auto law = law_preservation(spec, window, c.tolerance("law_preservation", 1e-9));
    j["law"] = law.to_json();
    Assertion a{"law_preservation", "exact", law.tv_exact, law.tv_tolerance, law.pass()};
    out.report.assertions.push_back(a);
  }
  // Paired before/after comparison of the origin hexagon under 10 rounds.
  struct Part {
    double sum = 0, sum2 = 0;
    long before = 0, after = 0, count = 0;
  };
  const auto parts = parallel_map<Part>(c.chains, c.threads, [&](int ch) {
    LoopChain chain(spec, spec.boundary, derive_seed(seed, ch));
    chain.sweep(c.burnin);
    Part p;
    for (long s = 0; s < c.samples; ++s) {
      chain.decorrelate(c.sweeps);
      LoopConfig w = chain.state();
      const int b = origin_hexagon(w);
      const CounterRng rng = CounterRng(derive_seed(seed, 1'000'000 + ch)).fork(s);
      for (int round = 0; round < 10; ++round) w = coupled_resample(w, spec, window, rng.fork(round));
      const int d = origin_hexagon(w) - b;
      p.before += b;
      p.after += origin_hexagon(w);
      p.sum += d;
      p.sum2 += d * d;
      ++p.count;
    }
    return p;
  });
  Part t;
  for (const auto& p : parts) {
    t.sum += p.sum;
    t.sum2 += p.sum2;
    t.before += p.before;
    t.after += p.after;
    t.count += p.count;
  }
  const double mean = t.sum / static_cast<double>(t.count);
  const double se = std::sqrt(std::max(0.0, t.sum2 / t.count - mean * mean) / static_cast<double>(t.count));
  Assertion s{"statistical_stationarity", "statistical"};
  s.value = std::abs(mean);
  s.tolerance = c.tolerance("stationarity_se", 3.0) * se;
  s.pass = s.value <= s.tolerance;
  s.detail = "paired difference of P(origin hexagon) after 10 rounds";
  out.report.assertions.push_back(s);
  const double nn = static_cast<double>(t.count);
  j["statistical"] = {{"samples", t.count},   {"before", t.before / nn}, {"after", t.after / nn},
                      {"mean_difference", mean}, {"standard_error", se},  {"pass", s.pass}};
  out.report.rows.push_back({"p_loop_origin_before", "Metropolis frequency", t.before / nn, t.before / nn,
                             t.before / nn, t.count, seed});
  out.report.rows.push_back({"p_loop_origin_after", "frequency after 10 coupled resamples", t.after / nn,
                             t.after / nn, t.after / nn, t.count, seed});
  out.payload = j.dump(2) + "\n";
  out.report.wall_seconds = sw.seconds();
  return out;
}

inline SuiteOptions suite_options(const ExperimentConfig& c) {
  SuiteOptions o;
  o.seed = c.require_seed();
  o.scale = c.scale;
  o.threads = c.threads;
  o.tolerances = c.tolerances;
  return o;
}

template <class Weight = StandardWeight>
CommandResult cmd_check(const ExperimentConfig& c, Weight wt = {}) {
  Stopwatch sw;
  CommandResult out;
  out.report.config = c;
  out.report.assertions = run_suite(suite_options(c), wt);
  nlohmann::json as = nlohmann::json::array();
  for (const auto& a : out.report.assertions) as.push_back(a.to_json());
  out.payload = nlohmann::json{{"assertions", as}, {"pass", out.report.pass()}}.dump(2) + "\n";
  out.report.wall_seconds = sw.seconds();
  return out;
}

inline CommandResult run_command(const ExperimentConfig& c) {
  c.validate();
  if (c.command == "enumerate") return cmd_enumerate(c);
  if (c.command == "sample") return cmd_sample(c);
  if (c.command == "rsw") return cmd_rsw(c);
  if (c.command == "blocking") return cmd_blocking(c);
  if (c.command == "arms") return cmd_arms(c);
  if (c.command == "trifurcation") return cmd_trifurcation(c);
  if (c.command == "couple") return cmd_couple(c);
  return cmd_check(c);
}

}  // namespace hexloop
