#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "hexloop/coupling.hpp"

using namespace hexloop;

namespace {

std::shared_ptr<const HexPatch> ball_ptr(int r) { return std::make_shared<const HexPatch>(HexPatch::ball(r)); }

SpinConfig random_spins(const HexPatch& h, CounterRng& rng) {
  SpinConfig s(h.face_count());
  for (auto& v : s) v = rng.bernoulli(0.5) ? 1 : -1;
  return s;
}

Blocking random_xi(const std::shared_ptr<const HexPatch>& h, double p, CounterRng& rng) {
  Blocking xi(h);
  for (auto& o : xi.open) o = rng.bernoulli(p);
  return xi;
}

bool hexagon_present(const LoopConfig& w, int f) {
  for (int e : w.patch().face_edges(f))
    if (!w.has(e)) return false;
  return true;
}

// Spec on B_r inside B_{r+2} whose boundary is the domain wall set of random spins.
GibbsSpec random_boundary_spec(int r, double n, double x, std::uint64_t seed) {
  auto host = ball_ptr(r + 2);
  CounterRng rng(seed);
  return {Domain(host, HexPatch::ball(r).faces()), n, x, dw(host, random_spins(*host, rng))};
}

}  // namespace

TEST(SampleXi, Examples) {
  const auto spec = GibbsSpec::ball(1, 1.0, 1.0);
  LoopConfig w = spec.boundary;
  w.flip_face(spec.host().face_id({0, 0}));
  CounterRng rng(1);
  for (int t = 0; t < 1000; ++t) {
    EXPECT_EQ(split_omega(w, sample_xi(w, 1.0, 0.8, rng, &spec.domain)).block.size(), 0);
    EXPECT_EQ(sample_xi(w, 1.7, 1.0, rng, &spec.domain).count() % 3, 0);
  }
  EXPECT_THROW(sample_xi(w, 0.9, 0.8, rng), RangeError);
  EXPECT_THROW(sample_xi(w, 1.5, 1.1, rng), RangeError);
}

TEST(SampleXi, Frequencies) {
  const auto spec = GibbsSpec::ball(1, 2.0, 1 / std::sqrt(2.0));
  const HexPatch& h = spec.host();
  LoopConfig w = spec.boundary;
  w.flip_face(h.face_id({0, 0}));
  const int on_loop = h.face_vertices(h.face_id({0, 0}))[1];
  ASSERT_TRUE(h.vertex(on_loop).up);
  int isolated = -1;
  for (int v : h.up_vertices())
    if (w.degree(v) == 0 && spec.domain.has_vertex(v)) isolated = v;
  ASSERT_GE(isolated, 0);
  CounterRng rng(7);
  long loop_open = 0, site_open = 0;
  const long draws = 100000;
  for (long t = 0; t < draws; ++t) {
    const auto xi = sample_xi(w, spec.n, spec.x, rng, &spec.domain);
    loop_open += xi.vertex_open(on_loop);
    site_open += xi.vertex_open(isolated);
  }
  EXPECT_NEAR(loop_open / double(draws), 0.5, 0.01);
  EXPECT_NEAR(site_open / double(draws), 0.5, 0.01);
}

TEST(SampleXi, StrandsStayClosedAndSplitIsConsistent) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto spec = random_boundary_spec(2, 1.8, 0.75, seed);
    CounterRng rng(seed + 100);
    const auto dec = decompose(spec.boundary);
    const auto xi = sample_xi(spec.boundary, spec.n, spec.x, rng, &spec.domain);
    for (const auto& p : dec.paths)
      for (int v : p.vertices) EXPECT_FALSE(xi.vertex_open(v));
    EXPECT_NO_THROW(split_omega(spec.boundary, xi));
  }
}

TEST(DomainWall, Examples) {
  auto h = ball_ptr(3);
  SpinConfig plus(h->face_count(), 1);
  EXPECT_EQ(dw(h, plus).size(), 0);
  SpinConfig one = plus;
  const int f = h->face_id({1, 0});
  one[f] = -1;
  LoopConfig hex(h);
  hex.flip_face(f);
  EXPECT_EQ(dw(h, one), hex);
  CounterRng rng(3);
  for (int t = 0; t < 10000; ++t) {
    auto s = random_spins(*h, rng);
    auto neg = s;
    for (auto& v : neg) v = static_cast<std::int8_t>(-v);
    ASSERT_EQ(dw(h, s), dw(h, neg));
  }
}

TEST(DomainWall, InverseExamples) {
  auto h = ball_ptr(3);
  const int anchor = h->face_id({2, 0});
  const auto constant = dw_inverse(LoopConfig(h), anchor, -1);
  for (auto v : constant) EXPECT_EQ(v, -1);
  LoopConfig hex(h);
  const int f = h->face_id({0, 0});
  hex.flip_face(f);
  const auto s = dw_inverse(hex, anchor, 1);
  for (int g = 0; g < h->face_count(); ++g) EXPECT_EQ(s[g], g == f ? -1 : 1);
  LoopConfig rim(h);
  rim.flip_face(h->face_id({3, 0}));
  EXPECT_THROW(dw_inverse(rim, anchor, 1), PreconditionError);
}

TEST(DomainWall, RoundTripAndTwoToOne) {
  auto h = ball_ptr(3);
  CounterRng rng(5);
  for (int t = 0; t < 10000; ++t) {
    const auto w = dw(h, random_spins(*h, rng));
    const int a = static_cast<int>(rng.below(h->face_count()));
    const auto plus = dw_inverse(w, a, 1);
    const auto minus = dw_inverse(w, a, -1);
    ASSERT_EQ(dw(h, plus), w);
    ASSERT_EQ(dw(h, minus), w);
    for (int g = 0; g < h->face_count(); ++g) ASSERT_EQ(plus[g], -minus[g]);
  }
  // Brute-force preimage count over every spin assignment of B_1.
  auto small = ball_ptr(1);
  const int m = small->face_count();
  std::map<LoopConfig, int> preimages;
  for (int mask = 0; mask < (1 << m); ++mask) {
    SpinConfig s(m);
    for (int g = 0; g < m; ++g) s[g] = mask >> g & 1 ? -1 : 1;
    ++preimages[dw(small, s)];
  }
  EXPECT_EQ(preimages.size(), 16u);
  for (const auto& [w, c] : preimages) EXPECT_EQ(c, 2);
}

TEST(Delta, Examples) {
  auto h = ball_ptr(2);
  Blocking xi(h);
  EXPECT_TRUE(delta(xi).empty());
  std::set<std::set<int>> triangles;
  const auto tri = h->triangular_graph();
  for (std::size_t i = 0; i < h->up_vertices().size(); ++i) {
    Blocking one(h);
    one.open[i] = 1;
    const auto d = delta(one);
    ASSERT_EQ(d.size(), 3u);
    std::set<int> faces;
    for (const auto& [a, b] : d) {
      faces.insert(a);
      faces.insert(b);
      const auto& nb = tri.neighbors(a);
      EXPECT_NE(std::find(nb.begin(), nb.end(), b), nb.end());
    }
    ASSERT_EQ(faces.size(), 3u);
    // An up-triangle has its apex face above the base: faces (K,L), (K,L-1), (K+1,L-1).
    const auto& c = h->vertex(h->up_vertices()[i]);
    EXPECT_EQ(faces, (std::set<int>{h->face_id({c.k, c.l}), h->face_id({c.k, c.l - 1}), h->face_id({c.k + 1, c.l - 1})}));
    triangles.insert(faces);
  }
  EXPECT_EQ(triangles.size(), h->up_vertices().size());
  const auto ug = h->up_graph();
  for (int i = 0; i < ug.size(); ++i)
    for (int j : ug.neighbors(i)) {
      Blocking two(h);
      two.open[i] = two.open[j] = 1;
      const auto d = delta(two);
      EXPECT_EQ(d.size(), 6u);
      Blocking a(h), b(h);
      a.open[i] = 1;
      b.open[j] = 1;
      std::set<int> fa, fb, common;
      for (const auto& [p, q] : delta(a)) fa.insert({p, q});
      for (const auto& [p, q] : delta(b)) fb.insert({p, q});
      std::set_intersection(fa.begin(), fa.end(), fb.begin(), fb.end(), std::inserter(common, common.end()));
      EXPECT_EQ(common.size(), 1u);
    }
}

TEST(Delta, ConnectivityEquivalence) {
  auto h = ball_ptr(5);
  const auto ug = h->up_graph();
  CounterRng rng(11);
  for (int t = 0; t < 10000; ++t) {
    const auto xi = random_xi(h, rng.uniform01(), rng);
    const auto cl = clusters(ug, xi.open, 1);
    auto uf = delta_clusters(xi);
    const auto& ups = h->up_vertices();
    for (std::size_t i = 0; i < ups.size(); ++i) {
      if (!xi.open[i]) continue;
      for (std::size_t j = i + 1; j < ups.size(); ++j) {
        if (!xi.open[j]) continue;
        const bool same_xi = cl.label[i] == cl.label[j];
        const bool same_delta = uf.same(h->vertex_faces(ups[i])[0], h->vertex_faces(ups[j])[0]);
        ASSERT_EQ(same_xi, same_delta);
      }
    }
  }
}

TEST(SplitOmega, Examples) {
  auto h = ball_ptr(4);
  LoopConfig two(h);
  two.flip_face(h->face_id({0, 0}));
  two.flip_face(h->face_id({2, 0}));
  const auto dec = decompose(two);
  ASSERT_EQ(dec.loops.size(), 2u);
  const auto none = split_omega(two, Blocking(h));
  EXPECT_EQ(none.free, two);
  EXPECT_EQ(none.block.size(), 0);
  const auto all = split_omega(two, make_blocking(two, dec, {0, 1}, {}));
  EXPECT_EQ(all.free.size(), 0);
  EXPECT_EQ(all.block, two);
  const auto mixed = split_omega(two, make_blocking(two, dec, {1}, {}));
  EXPECT_EQ(decompose(mixed.free).loops.size(), 1u);
  EXPECT_EQ(decompose(mixed.block).loops.size(), 1u);
  EXPECT_EQ(mixed.free.size() + mixed.block.size(), two.size());
  Blocking partial(h);
  partial.open[h->up_index(h->face_vertices(h->face_id({0, 0}))[1])] = 1;
  EXPECT_THROW(split_omega(two, partial), PreconditionError);
  const auto j = mixed.to_json();
  EXPECT_EQ(j["free"].size() + j["block"].size(), 12u);
}

TEST(SplitOmega, FullBlockingLeavesOnlyStrands) {
  const auto spec = random_boundary_spec(2, 1.5, 0.8, 4);
  const auto dec = decompose(spec.boundary);
  std::vector<int> all(dec.loops.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  const auto s = split_omega(spec.boundary, make_blocking(spec.boundary, dec, all, {}));
  EXPECT_TRUE(decompose(s.free).loops.empty());
  EXPECT_EQ(decompose(s.free).paths.size(), dec.paths.size());
}

TEST(SigmaTilde, Examples) {
  auto h = ball_ptr(3);
  CounterRng rng(2);
  const auto bc = random_spins(*h, rng);
  std::vector<int> window;
  for (const auto& c : HexPatch::ball(1).faces()) window.push_back(h->face_id(c));
  const Blocking empty(h);
  EXPECT_EQ(sigma_tilde(bc, empty, {}, rng), bc);
  std::map<int, std::set<int>> seen;
  for (std::uint64_t s = 0; s < 64; ++s) {
    const auto st = sigma_tilde(bc, empty, window, CounterRng(s));
    for (int f = 0; f < h->face_count(); ++f) {
      if (std::find(window.begin(), window.end(), f) == window.end()) {
        ASSERT_EQ(st[f], bc[f]);
      } else {
        seen[f].insert(st[f]);
      }
    }
  }
  for (int f : window) EXPECT_EQ(seen[f].size(), 2u);
  // A chain of triangles from the centre to a face outside the window.
  Blocking chain(h);
  for (int v : {h->vertex_id({0, 1, true}), h->vertex_id({1, 0, true}), h->vertex_id({1, 1, true})}) {
    ASSERT_GE(h->up_index(v), 0);
    chain.open[h->up_index(v)] = 1;
  }
  auto uf = delta_clusters(chain);
  const int centre = h->face_id({0, 0});
  for (std::uint64_t s = 0; s < 64; ++s) {
    const auto st = sigma_tilde(bc, chain, window, CounterRng(s));
    for (int f = 0; f < h->face_count(); ++f)
      if (uf.same(f, centre)) {
        ASSERT_EQ(st[f], bc[f]);
      }
  }
  EXPECT_GT(uf.component_size(centre), 3);
}

TEST(CoupledResample, SingleHexagonAtNx1) {
  const auto spec = GibbsSpec::ball(0, 1.0, 1.0);
  const auto window = window_faces(spec, {{0, 0}});
  const auto mu = enumerate_gibbs(spec);
  const auto push = exact_pushforward(mu, spec, window);
  ASSERT_EQ(push.size(), 2u);
  for (const auto& [c, p] : push) EXPECT_NEAR(p, 0.5, 1e-15);
}

TEST(CoupledResample, ExactStationarityGrid) {
  for (double n : {1.0, 1.5, 2.0})
    for (double x : {1 / std::sqrt(2.0), (1 / std::sqrt(2.0) + 1) / 2, 1.0}) {
      const auto spec = GibbsSpec::ball(1, n, x);
      const auto r = law_preservation(spec, window_faces(spec, {{0, 0}}));
      EXPECT_LE(r.tv_exact, 1e-9) << "n=" << n << " x=" << x;
      EXPECT_TRUE(r.to_json()["pass"].get<bool>());
    }
}

TEST(CoupledResample, ExactStationarityLargerWindowsAndBoundaries) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const double n = 1.0 + 0.2 * seed;
    const double x = 0.7 + 0.05 * seed;
    const auto spec = random_boundary_spec(1, n, x, seed);
    for (const auto& win : std::vector<std::vector<FaceCoord>>{{{0, 0}}, {{0, 0}, {1, 0}}, HexPatch::ball(1).faces()})
      EXPECT_LE(law_preservation(spec, window_faces(spec, win)).tv_exact, 1e-9) << seed;
  }
}

TEST(CoupledResample, WrongWeightIsNotStationary) {
  struct SignBug {
    double operator()(const GibbsSpec& s, int loops, int edges) const {
      return -loops * std::log(s.n) + edges * std::log(s.x);
    }
  };
  const auto spec = GibbsSpec::ball(1, 2.0, 1 / std::sqrt(2.0));
  EXPECT_GT(law_preservation(spec, window_faces(spec, {{0, 0}}), 1e-9, SignBug{}).tv_exact, 1e-3);
}

TEST(CoupledResample, SamplerMatchesExactKernel) {
  const auto spec = GibbsSpec::ball(1, 1.6, 0.8);
  const auto window = window_faces(spec, {{0, 0}, {0, 1}});
  LoopConfig start = spec.boundary;
  start.flip_face(spec.host().face_id({0, 0}));
  const auto point = ExactMeasure<LoopConfig>({start}, {1.0});
  const auto exact = exact_pushforward(point, spec, window);
  std::map<LoopConfig, long> counts;
  const long draws = 200000;
  for (long t = 0; t < draws; ++t) ++counts[coupled_resample(start, spec, window, static_cast<std::uint64_t>(t))];
  std::map<LoopConfig, double> emp;
  for (const auto& [c, k] : counts) emp[c] = k / double(draws);
  EXPECT_LT(total_variation(exact, emp), 0.01);
}

TEST(CoupledResample, StatisticalStationarity) {
  const auto spec = GibbsSpec::ball(3, 2.0, 1 / std::sqrt(2.0));
  const auto window = window_faces(spec, HexPatch::ball(1).faces());
  const int centre = spec.host().face_id({0, 0});
  LoopChain chain(spec, spec.boundary, 21);
  chain.sweep(500);
  const long samples = 20000;
  double sum = 0, sum2 = 0;
  long before = 0;
  for (long s = 0; s < samples; ++s) {
    chain.sweep(3);
    LoopConfig w = chain.state();
    const int b = hexagon_present(w, centre);
    CounterRng rng(1000 + s);
    for (int round = 0; round < 10; ++round) w = coupled_resample(w, spec, window, rng.fork(round));
    const int d = hexagon_present(w, centre) - b;
    before += b;
    sum += d;
    sum2 += d * d;
  }
  const double mean = sum / samples;
  const double se = std::sqrt((sum2 / samples - mean * mean) / samples);
  EXPECT_LE(std::abs(mean), 3 * se + 1e-12) << "before=" << before / double(samples);
}

TEST(ConditionalWeight, Examples) {
  auto h = ball_ptr(3);
  EXPECT_EQ(conditional_weight(LoopConfig(h), Blocking(h), 2.0, 0.8), 1.0);
  LoopConfig hex(h);
  hex.flip_face(h->face_id({0, 0}));
  const auto xi = make_blocking(hex, decompose(hex), {0}, {});
  EXPECT_EQ(xi.count(), 3);
  EXPECT_EQ(conditional_weight(hex, xi, 2.0, 0.8), 1.0);
  EXPECT_NEAR(conditional_weight(hex, xi, 3.0, 0.8), 2.0, 1e-15);
  EXPECT_THROW(conditional_weight(hex, xi, 1.0, 0.8), PreconditionError);
}

TEST(ConditionalWeight, JointEnumerationIsProportional) {
  for (auto [n, x] : std::vector<std::pair<double, double>>{{2.0, 1 / std::sqrt(2.0)}, {1.5, 0.8}, {1.2, 0.95}}) {
    const auto spec = GibbsSpec::ball(1, n, x);
    const auto mu = enumerate_gibbs(spec);
    std::map<std::pair<LoopConfig, Blocking>, double> marginal;
    std::map<std::pair<LoopConfig, Blocking>, int> free_count;
    double ratio = -1;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const auto& w = mu.config(i);
      const auto dec = decompose(w, &spec.domain);
      const auto cand = blocking_candidates(w, dec, &spec.domain);
      const int a = static_cast<int>(cand.loops.size());
      const int b = static_cast<int>(cand.vertices.size());
      for (std::uint32_t mask = 0; mask < (1u << (a + b)); ++mask) {
        double p = mu.prob(i);
        std::vector<int> ol, os;
        for (int j = 0; j < a; ++j) {
          const bool o = mask >> j & 1;
          p *= o ? (n - 1) / n : 1 / n;
          if (o) ol.push_back(cand.loops[j]);
        }
        for (int j = 0; j < b; ++j) {
          const bool o = mask >> (a + j) & 1;
          p *= o ? 1 - x * x : x * x;
          if (o) os.push_back(cand.vertices[j]);
        }
        const auto xi = make_blocking(w, dec, ol, os);
        const auto split = split_omega(w, xi);
        const double cw = conditional_weight(split.block, xi, n, x);
        if (ratio < 0) ratio = p / cw;
        ASSERT_NEAR(p / cw / ratio, 1.0, 1e-12);
        marginal[{split.block, xi}] += p;
        ++free_count[{split.block, xi}];
      }
    }
    for (const auto& [key, p] : marginal)
      EXPECT_NEAR(p / (conditional_weight(key.first, key.second, n, x) * free_count[key]) / ratio, 1.0, 1e-12);
  }
}

TEST(Reduction, UniformLoopsGiveFairSpins) {
  const auto spec = GibbsSpec::ball(1, 1.0, 1.0);
  const auto mu = enumerate_gibbs(spec);
  const int outside = spec.host().face_id({2, 0});
  const auto& faces = spec.domain.faces();
  std::map<int, double> pattern;
  std::vector<double> minus(faces.size(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto s = dw_inverse(mu.config(i), outside, 1);
    int key = 0;
    for (std::size_t j = 0; j < faces.size(); ++j)
      if (s[faces[j]] < 0) {
        key |= 1 << j;
        minus[j] += mu.prob(i);
      }
    pattern[key] += mu.prob(i);
  }
  EXPECT_EQ(pattern.size(), 32u);
  for (const auto& [k, p] : pattern) EXPECT_NEAR(p, 1.0 / 32, 1e-15);
  for (double m : minus) EXPECT_NEAR(m, 0.5, 1e-15);
}

TEST(BlockingStats, Corners) {
  const auto spec = GibbsSpec::ball(5, 1.0, 1.0);
  LoopChain chain(spec, spec.boundary, 4);
  CounterRng rng(8);
  for (int t = 0; t < 50; ++t) {
    chain.sweep();
    const auto xi = sample_xi(chain.state(), 1.0, 1.0, rng, &spec.domain);
    EXPECT_EQ(xi.count(), 0);
    EXPECT_FALSE(blocking_stats(xi, 2).crossing);
  }
  Blocking full(spec.host_ptr());
  for (auto& o : full.open) o = 1;
  const auto s = blocking_stats(full, 2);
  EXPECT_TRUE(s.crossing);
  EXPECT_DOUBLE_EQ(s.largest_fraction, 1.0);
  EXPECT_EQ(full.to_json().size(), spec.host().up_vertices().size());
  EXPECT_EQ(delta_to_json(delta(full)).size(), 3 * spec.host().up_vertices().size());
}
